// Copyright (c) 2026 the svkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVKIT_TENSOR_HPP_
#define SVKIT_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

namespace svkit {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);

namespace detail {

// One vertex of the reverse-mode graph. Values are row-major doubles; the
// gradient buffer is allocated on first use so inference passes stay light.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

// Dense N-dimensional double tensor, a shared handle onto a graph node.
// Copies of a Tensor alias the same storage; ops return fresh nodes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor from(const Shape& shape, std::vector<double> values);
  static Tensor scalar(double value);
  // A tracked leaf: gradients accumulate here across backward passes.
  static Tensor param(const Shape& shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t rank() const { return static_cast<int64_t>(node_->shape.size()); }
  int64_t dim(int64_t axis) const { return node_->shape[static_cast<size_t>(axis)]; }
  int64_t numel() const { return static_cast<int64_t>(node_->values.size()); }

  const std::vector<double>& values() const { return node_->values; }
  std::vector<double>& mutable_values() { return node_->values; }
  const std::vector<double>& grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  double item() const;  // scalar tensors only
  double at(std::initializer_list<int64_t> idx) const;

  // Value copy with no graph history.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

enum class Pad { kSame, kValid };
enum class Pointwise { kRelu, kSigmoid, kLog, kExp, kTanh, kSqrt };
enum class Reduce { kMean, kSum, kStd };

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// 2D cross-correlation. input (C_in,F,T), kernels (C_out,C_in,k_f,k_t).
// kSame pads zeros symmetrically, extra element on the trailing side.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int64_t stride_f,
              int64_t stride_t, Pad padding);

// 1D dilated cross-correlation with same-padding in time.
// input (C_in,T), kernels (C_out,C_in,k).
Tensor conv1d_dilated(const Tensor& input, const Tensor& kernels, int64_t dilation);

// Affine map along the trailing axis. input (...,D_in), weight (D_out,D_in),
// bias (D_out) or an undefined Tensor for none.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor pointwise(const Tensor& input, Pointwise fn);

// Reduction over an axis subset; reduced axes are removed from the shape.
// kStd is the biased estimator with 1e-8 added under the square root.
Tensor reduce(const Tensor& input, const std::vector<int64_t>& axes, Reduce mode);
Tensor reduce_all(const Tensor& input, Reduce mode);

// (R,C) -> (R); gradient flows to the (first) argmax of each row.
Tensor rowwise_max(const Tensor& input);

// Softmax along the trailing axis of a rank-2 tensor.
Tensor softmax_rows(const Tensor& input);

// Axis-0 concatenation of tensors agreeing on all trailing extents.
Tensor concat_rows(const std::vector<Tensor>& parts);

// Axis-0 slice [start, start+len).
Tensor narrow_rows(const Tensor& input, int64_t start, int64_t len);

// Same storage order, new extents (numel preserved).
Tensor reshape(const Tensor& input, const Shape& new_shape);

// x (C,rest...) scaled / shifted per leading index.
Tensor scale_rows(const Tensor& x, const Tensor& s);
Tensor add_row_bias(const Tensor& x, const Tensor& b);

// Frequency-axis ops on (C,F,T) maps: per-frequency rescale and the
// positional-encoding broadcast add out[c,f,t] = x[c,f,t] + p[f].
Tensor scale_freq(const Tensor& x, const Tensor& s);
Tensor add_freq_bias(const Tensor& x, const Tensor& p);

// v (C) -> (C,T), every column equal to v.
Tensor tile_cols(const Tensor& v, int64_t t);

// x (D) -> x / ||x||_2.
Tensor l2_normalize(const Tensor& x);
// x (R,D) -> rows normalized independently.
Tensor l2_normalize_rows(const Tensor& x);

// Batch normalization over all non-leading axes, channel axis 0. Running
// statistics live with the caller and are updated (momentum) in training
// mode; inference normalizes with the running values.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  std::vector<double>* running_mean, std::vector<double>* running_var,
                  double momentum, double eps, bool training);

// -log softmax(logits)[target] with max-subtraction.
Tensor cross_entropy(const Tensor& logits, int64_t target);

// Additive angular margin on the target cosine, then scaling: the target
// entry becomes s*cos(theta+m), all others s*cos(theta). Past theta+m > pi
// the monotone fallback s*(cos(theta) - m*sin(m)) applies.
Tensor aam_margin(const Tensor& cosines, int64_t target, double margin, double scale);

// Reverse-mode sweep from a scalar root; every tracked leaf reachable from
// the root receives d(root)/d(leaf) accumulated into its grad buffer.
void backward(const Tensor& root);

}  // namespace svkit

#endif  // SVKIT_TENSOR_HPP_

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

#ifndef SVKIT_BLOCKS_HPP_
#define SVKIT_BLOCKS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

// Trainable tensors, in registration order. Names are stable across runs and
// drive checkpoint layout.
using NamedParams = std::vector<std::pair<std::string, Tensor>>;
// Non-trainable state (batch-norm running statistics).
using NamedBuffers = std::vector<std::pair<std::string, std::vector<double>*>>;

Tensor init_uniform(const Shape& shape, int64_t fan_in, Rng& rng);

// Batch normalization over all non-channel axes with running statistics
// (momentum 0.1); inference normalizes with the running values.
class BatchNorm {
 public:
  explicit BatchNorm(int64_t channels);
  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

 private:
  Tensor gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
};

class LinearLayer {
 public:
  LinearLayer(int64_t d_out, int64_t d_in, Rng& rng);
  Tensor forward(const Tensor& x) const { return linear(x, weight_, bias_); }
  void collect(const std::string& prefix, NamedParams& params);
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_, bias_;
};

// Channel squeeze-excitation: squeeze averages each channel over all
// remaining axes, the two-layer excitation emits one sigmoid gate per
// channel. Works on (C,T) and (C,F,T) maps.
class SeBlock {
 public:
  SeBlock(int64_t channels, int64_t bottleneck, Rng& rng);
  Tensor forward(const Tensor& x) const;
  Tensor gates(const Tensor& x) const;  // the per-channel scalars in (0,1)
  void collect(const std::string& prefix, NamedParams& params);

 private:
  LinearLayer fc1_, fc2_;
};

// Frequency-wise squeeze-excitation on (C,F,T): the squeeze averages over
// channels and time per frequency bin, the excitation gates each frequency
// slice of every feature map.
class FwSeBlock {
 public:
  FwSeBlock(int64_t freq_bins, int64_t bottleneck, Rng& rng);
  Tensor forward(const Tensor& x) const;
  Tensor gates(const Tensor& x) const;  // s in (0,1)^F
  void collect(const std::string& prefix, NamedParams& params);

  const LinearLayer& fc1() const { return fc1_; }
  const LinearLayer& fc2() const { return fc2_; }

 private:
  int64_t freq_bins_;
  LinearLayer fc1_, fc2_;
};

// Trainable per-frequency bias, zero-initialized, broadcast over channels
// and time.
class FreqPositionalEncoding {
 public:
  explicit FreqPositionalEncoding(int64_t freq_bins);
  Tensor apply(const Tensor& x) const { return add_freq_bias(x, p_); }
  const Tensor& vector() const { return p_; }
  void collect(const std::string& prefix, NamedParams& params);

 private:
  Tensor p_;
};

struct StemConfig {
  int64_t channels = 128;
  int64_t kernel = 3;
  // stride 2 in frequency on the first and final conv; F -> F/4 overall
};

// 2D convolutional front-end: conv(s_f=2)-BN-ReLU, one residual 2D block,
// conv(s_f=2)-BN-ReLU, then the (C, F/4) axes flatten into channels.
class ConvStem {
 public:
  ConvStem(const StemConfig& cfg, Rng& rng);
  // x (1,F,T) with F divisible by 4 -> (C*F/4, T)
  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);
  int64_t out_channels(int64_t f_in) const { return cfg_.channels * (f_in / 4); }

 private:
  StemConfig cfg_;
  Tensor conv_in_, conv_res_a_, conv_res_b_, conv_out_;
  BatchNorm bn_in_, bn_res_a_, bn_res_b_, bn_out_;
};

// Frame-level residual block: 1x1 conv in, cascade of k=3 dilated group
// convolutions with additive cross-group feeding, 1x1 conv out, optional
// channel SE, identity skip.
class Res2DilatedBlock {
 public:
  Res2DilatedBlock(int64_t channels, int64_t scale, int64_t dilation, bool with_se,
                   int64_t se_bottleneck, Rng& rng);
  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers);

 private:
  int64_t channels_, scale_, dilation_;
  bool with_se_;
  Tensor conv_in_, conv_out_;
  std::vector<Tensor> group_convs_;
  BatchNorm bn_in_, bn_out_;
  std::vector<SeBlock> se_;  // 0 or 1
};

// Channel- and context-dependent attentive statistics over time:
// concat(weighted mean, weighted std), epsilon 1e-8 under the root.
class AttentiveStatsPool {
 public:
  AttentiveStatsPool(int64_t channels, int64_t hidden, Rng& rng);
  // h (C,T), T >= 2 -> (2C)
  Tensor forward(const Tensor& h) const;
  void collect(const std::string& prefix, NamedParams& params);

 private:
  Tensor w1_, b1_, w2_, b2_;  // conv1d k=1 weights with channel biases
};

}  // namespace svkit

#endif  // SVKIT_BLOCKS_HPP_

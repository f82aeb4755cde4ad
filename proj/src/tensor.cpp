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

#include "svkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace svkit {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

NodePtr make_node(Shape shape, std::vector<double> values) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  return n;
}

// Registers `out` as a graph vertex when any parent is tracked; otherwise the
// result is a plain value and the graph ends here.
Tensor finish(NodePtr out, std::vector<NodePtr> parents, std::function<void(Node&)> backprop) {
  bool tracked = false;
  for (const auto& p : parents) tracked = tracked || p->requires_grad;
  if (tracked) {
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backprop = std::move(backprop);
  }
  return Tensor::wrap(std::move(out));
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

int64_t same_pad_total(int64_t in, int64_t k, int64_t stride) {
  const int64_t out = (in + stride - 1) / stride;
  return std::max<int64_t>((out - 1) * stride + k - in, 0);
}

}  // namespace

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(const Shape& shape) {
  check(std::all_of(shape.begin(), shape.end(), [](int64_t d) { return d > 0; }),
        "tensor extents must be positive");
  return Tensor::wrap(make_node(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), 0.0)));
}

Tensor Tensor::full(const Shape& shape, double value) {
  Tensor t = zeros(shape);
  std::fill(t.mutable_values().begin(), t.mutable_values().end(), value);
  return t;
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values) {
  check(std::all_of(shape.begin(), shape.end(), [](int64_t d) { return d > 0; }),
        "tensor extents must be positive");
  check(shape_numel(shape) == static_cast<int64_t>(values.size()),
        "value count does not match shape " + shape_str(shape));
  return Tensor::wrap(make_node(shape, std::move(values)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::param(const Shape& shape, std::vector<double> values) {
  Tensor t = from(shape, std::move(values));
  t.node_ptr()->requires_grad = true;
  return t;
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  check(numel() == 1, "item() requires a scalar tensor");
  return node_->values[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  check(static_cast<int64_t>(idx.size()) == rank(), "index rank mismatch");
  int64_t flat = 0;
  size_t axis = 0;
  for (int64_t i : idx) {
    check(i >= 0 && i < node_->shape[axis], "index out of range");
    flat = flat * node_->shape[axis] + i;
    ++axis;
  }
  return node_->values[static_cast<size_t>(flat)];
}

Tensor Tensor::detach() const { return Tensor::wrap(make_node(node_->shape, node_->values)); }

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const auto pa = a.node_ptr();
  const auto pb = b.node_ptr();
  std::vector<double> out(pa->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->values[i] + pb->values[i];
  return finish(make_node(a.shape(), std::move(out)), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "sub: shape mismatch");
  const auto pa = a.node_ptr();
  const auto pb = b.node_ptr();
  std::vector<double> out(pa->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->values[i] - pb->values[i];
  return finish(make_node(a.shape(), std::move(out)), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch");
  const auto pa = a.node_ptr();
  const auto pb = b.node_ptr();
  std::vector<double> out(pa->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->values[i] * pb->values[i];
  return finish(make_node(a.shape(), std::move(out)), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->values[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->values[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  const auto pa = a.node_ptr();
  std::vector<double> out(pa->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->values[i] * c;
  return finish(make_node(a.shape(), std::move(out)), {pa}, [pa, c](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * c;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  const auto pa = a.node_ptr();
  std::vector<double> out(pa->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->values[i] + c;
  return finish(make_node(a.shape(), std::move(out)), {pa}, [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernels, int64_t stride_f,
              int64_t stride_t, Pad padding) {
  check(input.rank() == 3, "conv2d: input must be (C_in,F,T)");
  check(kernels.rank() == 4, "conv2d: kernels must be (C_out,C_in,k_f,k_t)");
  check(stride_f >= 1 && stride_t >= 1, "conv2d: strides must be >= 1");
  const int64_t c_in = input.dim(0), f_in = input.dim(1), t_in = input.dim(2);
  const int64_t c_out = kernels.dim(0), k_f = kernels.dim(2), k_t = kernels.dim(3);
  check(kernels.dim(1) == c_in, "conv2d: kernel C_in " + std::to_string(kernels.dim(1)) +
                                    " does not match input C_in " + std::to_string(c_in));

  int64_t pad_f0 = 0, pad_t0 = 0, f_pad = f_in, t_pad = t_in;
  if (padding == Pad::kSame) {
    const int64_t pf = same_pad_total(f_in, k_f, stride_f);
    const int64_t pt = same_pad_total(t_in, k_t, stride_t);
    pad_f0 = pf / 2;
    pad_t0 = pt / 2;
    f_pad = f_in + pf;
    t_pad = t_in + pt;
  }
  check(k_f <= f_pad && k_t <= t_pad, "conv2d: kernel exceeds padded input extents");
  const int64_t f_out = (f_pad - k_f) / stride_f + 1;
  const int64_t t_out = (t_pad - k_t) / stride_t + 1;

  const auto pin = input.node_ptr();
  const auto pk = kernels.node_ptr();
  std::vector<double> out(static_cast<size_t>(c_out * f_out * t_out), 0.0);

  const double* in = pin->values.data();
  const double* kw = pk->values.data();
  for (int64_t co = 0; co < c_out; ++co) {
    double* out_c = out.data() + co * f_out * t_out;
    for (int64_t ci = 0; ci < c_in; ++ci) {
      const double* in_c = in + ci * f_in * t_in;
      const double* kw_c = kw + (co * c_in + ci) * k_f * k_t;
      for (int64_t kf = 0; kf < k_f; ++kf) {
        for (int64_t kt = 0; kt < k_t; ++kt) {
          const double w = kw_c[kf * k_t + kt];
          if (w == 0.0) continue;
          for (int64_t fo = 0; fo < f_out; ++fo) {
            const int64_t fi = fo * stride_f + kf - pad_f0;
            if (fi < 0 || fi >= f_in) continue;
            const double* in_row = in_c + fi * t_in;
            double* out_row = out_c + fo * t_out;
            // valid to range: 0 <= to*stride_t + kt - pad_t0 < t_in
            int64_t to_lo = 0;
            if (kt - pad_t0 < 0) to_lo = (pad_t0 - kt + stride_t - 1) / stride_t;
            int64_t to_hi = t_out;
            {
              const int64_t lim = t_in - 1 - (kt - pad_t0);
              if (lim < 0) continue;
              to_hi = std::min<int64_t>(t_out, lim / stride_t + 1);
            }
            for (int64_t to = to_lo; to < to_hi; ++to)
              out_row[to] += w * in_row[to * stride_t + kt - pad_t0];
          }
        }
      }
    }
  }

  auto bp = [pin, pk, c_in, c_out, f_in, t_in, f_out, t_out, k_f, k_t, stride_f, stride_t,
             pad_f0, pad_t0](Node& self) {
    const double* gout = self.grad.data();
    if (pin->requires_grad) pin->ensure_grad();
    if (pk->requires_grad) pk->ensure_grad();
    for (int64_t co = 0; co < c_out; ++co) {
      const double* gout_c = gout + co * f_out * t_out;
      for (int64_t ci = 0; ci < c_in; ++ci) {
        for (int64_t kf = 0; kf < k_f; ++kf) {
          for (int64_t kt = 0; kt < k_t; ++kt) {
            const size_t kidx = static_cast<size_t>((co * c_in + ci) * k_f * k_t + kf * k_t + kt);
            const double w = pk->values[kidx];
            double gw = 0.0;
            for (int64_t fo = 0; fo < f_out; ++fo) {
              const int64_t fi = fo * stride_f + kf - pad_f0;
              if (fi < 0 || fi >= f_in) continue;
              const double* gout_row = gout_c + fo * t_out;
              const size_t in_base = static_cast<size_t>(ci * f_in * t_in + fi * t_in);
              int64_t to_lo = 0;
              if (kt - pad_t0 < 0) to_lo = (pad_t0 - kt + stride_t - 1) / stride_t;
              const int64_t lim = t_in - 1 - (kt - pad_t0);
              if (lim < 0) continue;
              const int64_t to_hi = std::min<int64_t>(t_out, lim / stride_t + 1);
              if (pk->requires_grad) {
                for (int64_t to = to_lo; to < to_hi; ++to)
                  gw += gout_row[to] * pin->values[in_base + static_cast<size_t>(to * stride_t + kt - pad_t0)];
              }
              if (pin->requires_grad) {
                for (int64_t to = to_lo; to < to_hi; ++to)
                  pin->grad[in_base + static_cast<size_t>(to * stride_t + kt - pad_t0)] += w * gout_row[to];
              }
            }
            if (pk->requires_grad) pk->grad[kidx] += gw;
          }
        }
      }
    }
  };
  return finish(make_node({c_out, f_out, t_out}, std::move(out)), {pin, pk}, std::move(bp));
}

Tensor conv1d_dilated(const Tensor& input, const Tensor& kernels, int64_t dilation) {
  check(input.rank() == 2, "conv1d_dilated: input must be (C_in,T)");
  check(kernels.rank() == 3, "conv1d_dilated: kernels must be (C_out,C_in,k)");
  check(dilation >= 1, "conv1d_dilated: dilation must be >= 1");
  const int64_t c_in = input.dim(0), t_len = input.dim(1);
  const int64_t c_out = kernels.dim(0), k = kernels.dim(2);
  check(kernels.dim(1) == c_in, "conv1d_dilated: kernel C_in does not match input");

  const int64_t span = (k - 1) * dilation;  // receptive field minus one
  const int64_t pad0 = span / 2;

  const auto pin = input.node_ptr();
  const auto pk = kernels.node_ptr();
  std::vector<double> out(static_cast<size_t>(c_out * t_len), 0.0);

  for (int64_t co = 0; co < c_out; ++co) {
    double* out_c = out.data() + co * t_len;
    for (int64_t ci = 0; ci < c_in; ++ci) {
      const double* in_c = pin->values.data() + ci * t_len;
      for (int64_t j = 0; j < k; ++j) {
        const double w = pk->values[static_cast<size_t>((co * c_in + ci) * k + j)];
        if (w == 0.0) continue;
        const int64_t off = j * dilation - pad0;
        const int64_t lo = std::max<int64_t>(0, -off);
        const int64_t hi = std::min<int64_t>(t_len, t_len - off);
        for (int64_t t = lo; t < hi; ++t) out_c[t] += w * in_c[t + off];
      }
    }
  }

  auto bp = [pin, pk, c_in, c_out, t_len, k, dilation, pad0](Node& self) {
    if (pin->requires_grad) pin->ensure_grad();
    if (pk->requires_grad) pk->ensure_grad();
    for (int64_t co = 0; co < c_out; ++co) {
      const double* g_c = self.grad.data() + co * t_len;
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const double* in_c = pin->values.data() + ci * t_len;
        double* gin_c = pin->requires_grad ? pin->grad.data() + ci * t_len : nullptr;
        for (int64_t j = 0; j < k; ++j) {
          const size_t kidx = static_cast<size_t>((co * c_in + ci) * k + j);
          const double w = pk->values[kidx];
          const int64_t off = j * dilation - pad0;
          const int64_t lo = std::max<int64_t>(0, -off);
          const int64_t hi = std::min<int64_t>(t_len, t_len - off);
          if (pk->requires_grad) {
            double gw = 0.0;
            for (int64_t t = lo; t < hi; ++t) gw += g_c[t] * in_c[t + off];
            pk->grad[kidx] += gw;
          }
          if (gin_c) {
            for (int64_t t = lo; t < hi; ++t) gin_c[t + off] += w * g_c[t];
          }
        }
      }
    }
  };
  return finish(make_node({c_out, t_len}, std::move(out)), {pin, pk}, std::move(bp));
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  check(weight.rank() == 2, "linear: weight must be (D_out,D_in)");
  check(input.rank() >= 1, "linear: input must have at least one axis");
  const int64_t d_in = input.dim(input.rank() - 1);
  check(weight.dim(1) == d_in, "linear: trailing extent " + std::to_string(d_in) +
                                   " does not match weight D_in " + std::to_string(weight.dim(1)));
  const int64_t d_out = weight.dim(0);
  const bool has_bias = bias.defined();
  if (has_bias) {
    check(bias.rank() == 1 && bias.dim(0) == d_out, "linear: bias must be (D_out)");
  }
  const int64_t rows = input.numel() / d_in;

  Shape out_shape(input.shape());
  out_shape.back() = d_out;

  const auto pin = input.node_ptr();
  const auto pw = weight.node_ptr();
  const auto pb = has_bias ? bias.node_ptr() : nullptr;

  std::vector<double> out(static_cast<size_t>(rows * d_out), 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = pin->values.data() + r * d_in;
    double* y = out.data() + r * d_out;
    for (int64_t o = 0; o < d_out; ++o) {
      const double* w = pw->values.data() + o * d_in;
      double acc = has_bias ? pb->values[static_cast<size_t>(o)] : 0.0;
      for (int64_t i = 0; i < d_in; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }

  std::vector<NodePtr> parents = {pin, pw};
  if (has_bias) parents.push_back(pb);
  auto bp = [pin, pw, pb, rows, d_in, d_out](Node& self) {
    if (pin->requires_grad) pin->ensure_grad();
    if (pw->requires_grad) pw->ensure_grad();
    if (pb && pb->requires_grad) pb->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* g = self.grad.data() + r * d_out;
      const double* x = pin->values.data() + r * d_in;
      for (int64_t o = 0; o < d_out; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        const double* w = pw->values.data() + o * d_in;
        if (pin->requires_grad) {
          double* gx = pin->grad.data() + r * d_in;
          for (int64_t i = 0; i < d_in; ++i) gx[i] += go * w[i];
        }
        if (pw->requires_grad) {
          double* gw = pw->grad.data() + o * d_in;
          for (int64_t i = 0; i < d_in; ++i) gw[i] += go * x[i];
        }
        if (pb && pb->requires_grad) pb->grad[static_cast<size_t>(o)] += go;
      }
    }
  };
  return finish(make_node(std::move(out_shape), std::move(out)), std::move(parents), std::move(bp));
}

// ---------------------------------------------------------------------------
// Pointwise
// ---------------------------------------------------------------------------

Tensor pointwise(const Tensor& input, Pointwise fn) {
  const auto pin = input.node_ptr();
  std::vector<double> out(pin->values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = pin->values[i];
    switch (fn) {
      case Pointwise::kRelu: out[i] = x > 0.0 ? x : 0.0; break;
      case Pointwise::kSigmoid: out[i] = 1.0 / (1.0 + std::exp(-x)); break;
      case Pointwise::kLog:
        if (x <= 0.0) throw std::domain_error("pointwise log: non-positive input");
        out[i] = std::log(x);
        break;
      case Pointwise::kExp: out[i] = std::exp(x); break;
      case Pointwise::kTanh: out[i] = std::tanh(x); break;
      case Pointwise::kSqrt:
        if (x < 0.0) throw std::domain_error("pointwise sqrt: negative input");
        out[i] = std::sqrt(x);
        break;
    }
  }
  return finish(make_node(input.shape(), std::move(out)), {pin}, [pin, fn](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double g = self.grad[i];
      if (g == 0.0) continue;
      double d = 0.0;
      const double x = pin->values[i];
      const double y = self.values[i];
      switch (fn) {
        case Pointwise::kRelu: d = x > 0.0 ? 1.0 : 0.0; break;
        case Pointwise::kSigmoid: d = y * (1.0 - y); break;
        case Pointwise::kLog: d = 1.0 / x; break;
        case Pointwise::kExp: d = y; break;
        case Pointwise::kTanh: d = 1.0 - y * y; break;
        case Pointwise::kSqrt: d = y > 0.0 ? 0.5 / y : 0.0; break;
      }
      pin->grad[i] += g * d;
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

namespace {

// Maps each input flat index to its output cell for a reduce over `axes`.
struct ReducePlan {
  Shape out_shape;       // reduced axes removed (may be empty -> scalar)
  int64_t reduced_n = 1;  // elements folded into each output cell
  std::vector<int64_t> in_strides;
  std::vector<int64_t> out_stride_per_axis;  // 0 for reduced axes

  int64_t out_index(int64_t flat, const Shape& in_shape) const {
    int64_t rem = flat, out = 0;
    for (size_t a = 0; a < in_shape.size(); ++a) {
      const int64_t coord = rem / in_strides[a];
      rem -= coord * in_strides[a];
      out += coord * out_stride_per_axis[a];
    }
    return out;
  }
};

ReducePlan make_reduce_plan(const Shape& in_shape, const std::vector<int64_t>& axes) {
  check(!axes.empty(), "reduce: empty axis set");
  std::vector<bool> is_reduced(in_shape.size(), false);
  for (int64_t a : axes) {
    check(a >= 0 && a < static_cast<int64_t>(in_shape.size()), "reduce: axis out of range");
    check(!is_reduced[static_cast<size_t>(a)], "reduce: duplicate axis");
    is_reduced[static_cast<size_t>(a)] = true;
  }
  ReducePlan plan;
  for (size_t a = 0; a < in_shape.size(); ++a) {
    if (is_reduced[a]) {
      plan.reduced_n *= in_shape[a];
    } else {
      plan.out_shape.push_back(in_shape[a]);
    }
  }
  plan.in_strides.assign(in_shape.size(), 1);
  for (int64_t a = static_cast<int64_t>(in_shape.size()) - 2; a >= 0; --a)
    plan.in_strides[static_cast<size_t>(a)] =
        plan.in_strides[static_cast<size_t>(a + 1)] * in_shape[static_cast<size_t>(a + 1)];
  plan.out_stride_per_axis.assign(in_shape.size(), 0);
  int64_t running = 1;
  for (int64_t a = static_cast<int64_t>(in_shape.size()) - 1; a >= 0; --a) {
    if (!is_reduced[static_cast<size_t>(a)]) {
      plan.out_stride_per_axis[static_cast<size_t>(a)] = running;
      running *= in_shape[static_cast<size_t>(a)];
    }
  }
  return plan;
}

constexpr double kStdEps = 1e-8;  // under the square root, biased estimator

}  // namespace

Tensor reduce(const Tensor& input, const std::vector<int64_t>& axes, Reduce mode) {
  const auto pin = input.node_ptr();
  ReducePlan plan = make_reduce_plan(input.shape(), axes);
  const int64_t out_n = shape_numel(plan.out_shape);
  const int64_t n = plan.reduced_n;
  const Shape in_shape = input.shape();

  std::vector<double> sum(static_cast<size_t>(out_n), 0.0);
  std::vector<double> sumsq;
  if (mode == Reduce::kStd) sumsq.assign(static_cast<size_t>(out_n), 0.0);
  for (int64_t i = 0; i < input.numel(); ++i) {
    const int64_t o = plan.out_index(i, in_shape);
    const double v = pin->values[static_cast<size_t>(i)];
    sum[static_cast<size_t>(o)] += v;
    if (mode == Reduce::kStd) sumsq[static_cast<size_t>(o)] += v * v;
  }

  std::vector<double> out(static_cast<size_t>(out_n));
  std::vector<double> means, stds;
  switch (mode) {
    case Reduce::kSum:
      out = sum;
      break;
    case Reduce::kMean:
      for (int64_t o = 0; o < out_n; ++o) out[static_cast<size_t>(o)] = sum[static_cast<size_t>(o)] / n;
      break;
    case Reduce::kStd: {
      means.resize(static_cast<size_t>(out_n));
      stds.resize(static_cast<size_t>(out_n));
      for (int64_t o = 0; o < out_n; ++o) {
        const double mu = sum[static_cast<size_t>(o)] / n;
        double var = sumsq[static_cast<size_t>(o)] / n - mu * mu;
        if (var < 0.0) var = 0.0;
        means[static_cast<size_t>(o)] = mu;
        stds[static_cast<size_t>(o)] = std::sqrt(var + kStdEps);
        out[static_cast<size_t>(o)] = stds[static_cast<size_t>(o)];
      }
      break;
    }
  }

  auto bp = [pin, plan, in_shape, mode, n, means, stds](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    const int64_t total = static_cast<int64_t>(pin->values.size());
    for (int64_t i = 0; i < total; ++i) {
      const int64_t o = plan.out_index(i, in_shape);
      const double g = self.grad[static_cast<size_t>(o)];
      if (g == 0.0) continue;
      switch (mode) {
        case Reduce::kSum: pin->grad[static_cast<size_t>(i)] += g; break;
        case Reduce::kMean: pin->grad[static_cast<size_t>(i)] += g / n; break;
        case Reduce::kStd: {
          const double mu = means[static_cast<size_t>(o)];
          const double s = stds[static_cast<size_t>(o)];
          pin->grad[static_cast<size_t>(i)] += g * (pin->values[static_cast<size_t>(i)] - mu) / (n * s);
          break;
        }
      }
    }
  };
  if (plan.out_shape.empty()) plan.out_shape = {1};
  return finish(make_node(plan.out_shape, std::move(out)), {pin}, std::move(bp));
}

Tensor reduce_all(const Tensor& input, Reduce mode) {
  std::vector<int64_t> axes(static_cast<size_t>(input.rank()));
  for (size_t a = 0; a < axes.size(); ++a) axes[a] = static_cast<int64_t>(a);
  return reduce(input, axes, mode);
}

Tensor rowwise_max(const Tensor& input) {
  check(input.rank() == 2, "rowwise_max: input must be rank 2");
  const int64_t rows = input.dim(0), cols = input.dim(1);
  const auto pin = input.node_ptr();
  std::vector<double> out(static_cast<size_t>(rows));
  std::vector<int64_t> argmax(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = pin->values.data() + r * cols;
    int64_t best = 0;
    for (int64_t c = 1; c < cols; ++c)
      if (x[c] > x[best]) best = c;
    out[static_cast<size_t>(r)] = x[best];
    argmax[static_cast<size_t>(r)] = best;
  }
  return finish(make_node({rows}, std::move(out)), {pin}, [pin, argmax, cols](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    for (size_t r = 0; r < argmax.size(); ++r)
      pin->grad[r * static_cast<size_t>(cols) + static_cast<size_t>(argmax[r])] += self.grad[r];
  });
}

Tensor softmax_rows(const Tensor& input) {
  check(input.rank() == 2, "softmax_rows: input must be rank 2");
  const int64_t rows = input.dim(0), cols = input.dim(1);
  const auto pin = input.node_ptr();
  std::vector<double> out(pin->values.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = pin->values.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int64_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return finish(make_node(input.shape(), std::move(out)), {pin}, [pin, rows, cols](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* p = self.values.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (int64_t c = 0; c < cols; ++c) dot += g[c] * p[c];
      double* gx = pin->grad.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) gx[c] += p[c] * (g[c] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_rows: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  int64_t rows = 0;
  for (const auto& p : parts) {
    Shape pt(p.shape().begin() + 1, p.shape().end());
    check(pt == tail, "concat_rows: trailing extents differ");
    rows += p.dim(0);
  }
  const int64_t inner = shape_numel(tail);
  Shape out_shape = {rows};
  out_shape.insert(out_shape.end(), tail.begin(), tail.end());

  std::vector<double> out;
  out.reserve(static_cast<size_t>(rows * inner));
  std::vector<NodePtr> parents;
  for (const auto& p : parts) {
    const auto& v = p.node_ptr()->values;
    out.insert(out.end(), v.begin(), v.end());
    parents.push_back(p.node_ptr());
  }
  auto bp = [parents](Node& self) {
    size_t offset = 0;
    for (const auto& p : parents) {
      const size_t len = p->values.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (size_t i = 0; i < len; ++i) p->grad[i] += self.grad[offset + i];
      }
      offset += len;
    }
  };
  return finish(make_node(std::move(out_shape), std::move(out)), parents, std::move(bp));
}

Tensor narrow_rows(const Tensor& input, int64_t start, int64_t len) {
  check(input.rank() >= 1, "narrow_rows: rank must be >= 1");
  check(start >= 0 && len >= 1 && start + len <= input.dim(0), "narrow_rows: slice out of range");
  const int64_t inner = input.numel() / input.dim(0);
  const auto pin = input.node_ptr();
  Shape out_shape = input.shape();
  out_shape[0] = len;
  std::vector<double> out(pin->values.begin() + start * inner,
                          pin->values.begin() + (start + len) * inner);
  return finish(make_node(std::move(out_shape), std::move(out)), {pin}, [pin, start, inner](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    const size_t base = static_cast<size_t>(start * inner);
    for (size_t i = 0; i < self.grad.size(); ++i) pin->grad[base + i] += self.grad[i];
  });
}

Tensor reshape(const Tensor& input, const Shape& new_shape) {
  check(shape_numel(new_shape) == input.numel(), "reshape: numel mismatch");
  const auto pin = input.node_ptr();
  return finish(make_node(new_shape, pin->values), {pin}, [pin](Node& self) {
    if (!pin->requires_grad) return;
    pin->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pin->grad[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Broadcast helpers (channel / frequency)
// ---------------------------------------------------------------------------

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  check(x.rank() >= 1 && s.rank() == 1 && s.dim(0) == x.dim(0),
        "scale_rows: scale length must equal leading extent");
  const int64_t rows = x.dim(0);
  const int64_t inner = x.numel() / rows;
  const auto px = x.node_ptr();
  const auto ps = s.node_ptr();
  std::vector<double> out(px->values.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double sv = ps->values[static_cast<size_t>(r)];
    const double* xi = px->values.data() + r * inner;
    double* yo = out.data() + r * inner;
    for (int64_t i = 0; i < inner; ++i) yo[i] = xi[i] * sv;
  }
  return finish(make_node(x.shape(), std::move(out)), {px, ps}, [px, ps, rows, inner](Node& self) {
    for (int64_t r = 0; r < rows; ++r) {
      const double sv = ps->values[static_cast<size_t>(r)];
      const double* g = self.grad.data() + r * inner;
      if (px->requires_grad) {
        px->ensure_grad();
        double* gx = px->grad.data() + r * inner;
        for (int64_t i = 0; i < inner; ++i) gx[i] += g[i] * sv;
      }
      if (ps->requires_grad) {
        ps->ensure_grad();
        const double* xi = px->values.data() + r * inner;
        double acc = 0.0;
        for (int64_t i = 0; i < inner; ++i) acc += g[i] * xi[i];
        ps->grad[static_cast<size_t>(r)] += acc;
      }
    }
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
  check(x.rank() >= 1 && b.rank() == 1 && b.dim(0) == x.dim(0),
        "add_row_bias: bias length must equal leading extent");
  const int64_t rows = x.dim(0);
  const int64_t inner = x.numel() / rows;
  const auto px = x.node_ptr();
  const auto pb = b.node_ptr();
  std::vector<double> out(px->values.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double bv = pb->values[static_cast<size_t>(r)];
    const double* xi = px->values.data() + r * inner;
    double* yo = out.data() + r * inner;
    for (int64_t i = 0; i < inner; ++i) yo[i] = xi[i] + bv;
  }
  return finish(make_node(x.shape(), std::move(out)), {px, pb}, [px, pb, rows, inner](Node& self) {
    for (int64_t r = 0; r < rows; ++r) {
      const double* g = self.grad.data() + r * inner;
      if (px->requires_grad) {
        px->ensure_grad();
        double* gx = px->grad.data() + r * inner;
        for (int64_t i = 0; i < inner; ++i) gx[i] += g[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        double acc = 0.0;
        for (int64_t i = 0; i < inner; ++i) acc += g[i];
        pb->grad[static_cast<size_t>(r)] += acc;
      }
    }
  });
}

Tensor scale_freq(const Tensor& x, const Tensor& s) {
  check(x.rank() == 3, "scale_freq: input must be (C,F,T)");
  check(s.rank() == 1 && s.dim(0) == x.dim(1), "scale_freq: scale length must equal F");
  const int64_t c_n = x.dim(0), f_n = x.dim(1), t_n = x.dim(2);
  const auto px = x.node_ptr();
  const auto ps = s.node_ptr();
  std::vector<double> out(px->values.size());
  for (int64_t c = 0; c < c_n; ++c) {
    for (int64_t f = 0; f < f_n; ++f) {
      const double sv = ps->values[static_cast<size_t>(f)];
      const double* xi = px->values.data() + (c * f_n + f) * t_n;
      double* yo = out.data() + (c * f_n + f) * t_n;
      for (int64_t t = 0; t < t_n; ++t) yo[t] = xi[t] * sv;
    }
  }
  return finish(make_node(x.shape(), std::move(out)), {px, ps}, [px, ps, c_n, f_n, t_n](Node& self) {
    if (px->requires_grad) px->ensure_grad();
    if (ps->requires_grad) ps->ensure_grad();
    for (int64_t c = 0; c < c_n; ++c) {
      for (int64_t f = 0; f < f_n; ++f) {
        const double sv = ps->values[static_cast<size_t>(f)];
        const double* g = self.grad.data() + (c * f_n + f) * t_n;
        if (px->requires_grad) {
          double* gx = px->grad.data() + (c * f_n + f) * t_n;
          for (int64_t t = 0; t < t_n; ++t) gx[t] += g[t] * sv;
        }
        if (ps->requires_grad) {
          const double* xi = px->values.data() + (c * f_n + f) * t_n;
          double acc = 0.0;
          for (int64_t t = 0; t < t_n; ++t) acc += g[t] * xi[t];
          ps->grad[static_cast<size_t>(f)] += acc;
        }
      }
    }
  });
}

Tensor add_freq_bias(const Tensor& x, const Tensor& p) {
  check(x.rank() == 3, "add_freq_bias: input must be (C,F,T)");
  check(p.rank() == 1 && p.dim(0) == x.dim(1),
        "add_freq_bias: encoding length " + std::to_string(p.defined() ? p.dim(0) : -1) +
            " does not match F " + std::to_string(x.dim(1)));
  const int64_t c_n = x.dim(0), f_n = x.dim(1), t_n = x.dim(2);
  const auto px = x.node_ptr();
  const auto pp = p.node_ptr();
  std::vector<double> out(px->values.size());
  for (int64_t c = 0; c < c_n; ++c) {
    for (int64_t f = 0; f < f_n; ++f) {
      const double pv = pp->values[static_cast<size_t>(f)];
      const double* xi = px->values.data() + (c * f_n + f) * t_n;
      double* yo = out.data() + (c * f_n + f) * t_n;
      for (int64_t t = 0; t < t_n; ++t) yo[t] = xi[t] + pv;
    }
  }
  return finish(make_node(x.shape(), std::move(out)), {px, pp}, [px, pp, c_n, f_n, t_n](Node& self) {
    if (px->requires_grad) px->ensure_grad();
    if (pp->requires_grad) pp->ensure_grad();
    for (int64_t c = 0; c < c_n; ++c) {
      for (int64_t f = 0; f < f_n; ++f) {
        const double* g = self.grad.data() + (c * f_n + f) * t_n;
        if (px->requires_grad) {
          double* gx = px->grad.data() + (c * f_n + f) * t_n;
          for (int64_t t = 0; t < t_n; ++t) gx[t] += g[t];
        }
        if (pp->requires_grad) {
          double acc = 0.0;
          for (int64_t t = 0; t < t_n; ++t) acc += g[t];
          pp->grad[static_cast<size_t>(f)] += acc;
        }
      }
    }
  });
}

Tensor tile_cols(const Tensor& v, int64_t t) {
  check(v.rank() == 1, "tile_cols: input must be a vector");
  check(t >= 1, "tile_cols: extent must be positive");
  const int64_t c_n = v.dim(0);
  const auto pv = v.node_ptr();
  std::vector<double> out(static_cast<size_t>(c_n * t));
  for (int64_t c = 0; c < c_n; ++c)
    for (int64_t i = 0; i < t; ++i) out[static_cast<size_t>(c * t + i)] = pv->values[static_cast<size_t>(c)];
  return finish(make_node({c_n, t}, std::move(out)), {pv}, [pv, c_n, t](Node& self) {
    if (!pv->requires_grad) return;
    pv->ensure_grad();
    for (int64_t c = 0; c < c_n; ++c) {
      double acc = 0.0;
      for (int64_t i = 0; i < t; ++i) acc += self.grad[static_cast<size_t>(c * t + i)];
      pv->grad[static_cast<size_t>(c)] += acc;
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

Tensor l2_normalize_impl(const Tensor& x, int64_t rows, int64_t d) {
  const auto px = x.node_ptr();
  std::vector<double> out(px->values.size());
  std::vector<double> norms(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const double* xi = px->values.data() + r * d;
    double nrm = 0.0;
    for (int64_t i = 0; i < d; ++i) nrm += xi[i] * xi[i];
    nrm = std::sqrt(nrm);
    check(nrm > 0.0, "l2_normalize: zero vector");
    norms[static_cast<size_t>(r)] = nrm;
    double* yo = out.data() + r * d;
    for (int64_t i = 0; i < d; ++i) yo[i] = xi[i] / nrm;
  }
  return finish(make_node(x.shape(), std::move(out)), {px}, [px, norms, rows, d](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = self.values.data() + r * d;
      const double* g = self.grad.data() + r * d;
      const double nrm = norms[static_cast<size_t>(r)];
      double dot = 0.0;
      for (int64_t i = 0; i < d; ++i) dot += g[i] * y[i];
      double* gx = px->grad.data() + r * d;
      for (int64_t i = 0; i < d; ++i) gx[i] += (g[i] - dot * y[i]) / nrm;
    }
  });
}

}  // namespace

Tensor l2_normalize(const Tensor& x) {
  check(x.rank() == 1, "l2_normalize: input must be a vector");
  return l2_normalize_impl(x, 1, x.dim(0));
}

Tensor l2_normalize_rows(const Tensor& x) {
  check(x.rank() == 2, "l2_normalize_rows: input must be rank 2");
  return l2_normalize_impl(x, x.dim(0), x.dim(1));
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  std::vector<double>* running_mean, std::vector<double>* running_var,
                  double momentum, double eps, bool training) {
  check(x.rank() >= 2, "batch_norm: input must have a channel axis plus data axes");
  const int64_t c_n = x.dim(0);
  const int64_t inner = x.numel() / c_n;
  check(gamma.rank() == 1 && gamma.dim(0) == c_n, "batch_norm: gamma must be (C)");
  check(beta.rank() == 1 && beta.dim(0) == c_n, "batch_norm: beta must be (C)");
  check(running_mean && running_var && static_cast<int64_t>(running_mean->size()) == c_n &&
            static_cast<int64_t>(running_var->size()) == c_n,
        "batch_norm: running stats must be (C)");

  const auto px = x.node_ptr();
  const auto pg = gamma.node_ptr();
  const auto pb = beta.node_ptr();

  std::vector<double> mean(static_cast<size_t>(c_n)), invstd(static_cast<size_t>(c_n));
  if (training) {
    for (int64_t c = 0; c < c_n; ++c) {
      const double* xi = px->values.data() + c * inner;
      double s = 0.0, s2 = 0.0;
      for (int64_t i = 0; i < inner; ++i) {
        s += xi[i];
        s2 += xi[i] * xi[i];
      }
      const double mu = s / inner;
      double var = s2 / inner - mu * mu;
      if (var < 0.0) var = 0.0;
      mean[static_cast<size_t>(c)] = mu;
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(var + eps);
      (*running_mean)[static_cast<size_t>(c)] = (1.0 - momentum) * (*running_mean)[static_cast<size_t>(c)] + momentum * mu;
      (*running_var)[static_cast<size_t>(c)] = (1.0 - momentum) * (*running_var)[static_cast<size_t>(c)] + momentum * var;
    }
  } else {
    for (int64_t c = 0; c < c_n; ++c) {
      mean[static_cast<size_t>(c)] = (*running_mean)[static_cast<size_t>(c)];
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt((*running_var)[static_cast<size_t>(c)] + eps);
    }
  }

  std::vector<double> out(px->values.size());
  for (int64_t c = 0; c < c_n; ++c) {
    const double mu = mean[static_cast<size_t>(c)];
    const double is = invstd[static_cast<size_t>(c)];
    const double gm = pg->values[static_cast<size_t>(c)];
    const double bt = pb->values[static_cast<size_t>(c)];
    const double* xi = px->values.data() + c * inner;
    double* yo = out.data() + c * inner;
    for (int64_t i = 0; i < inner; ++i) yo[i] = (xi[i] - mu) * is * gm + bt;
  }

  auto bp = [px, pg, pb, c_n, inner, mean, invstd, training](Node& self) {
    if (px->requires_grad) px->ensure_grad();
    if (pg->requires_grad) pg->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    for (int64_t c = 0; c < c_n; ++c) {
      const double mu = mean[static_cast<size_t>(c)];
      const double is = invstd[static_cast<size_t>(c)];
      const double gm = pg->values[static_cast<size_t>(c)];
      const double* g = self.grad.data() + c * inner;
      const double* xi = px->values.data() + c * inner;
      double gsum = 0.0, gxhat = 0.0;
      for (int64_t i = 0; i < inner; ++i) {
        gsum += g[i];
        gxhat += g[i] * (xi[i] - mu) * is;
      }
      if (pg->requires_grad) pg->grad[static_cast<size_t>(c)] += gxhat;
      if (pb->requires_grad) pb->grad[static_cast<size_t>(c)] += gsum;
      if (px->requires_grad) {
        double* gx = px->grad.data() + c * inner;
        if (training) {
          // batch statistics participate in the graph
          const double m = static_cast<double>(inner);
          for (int64_t i = 0; i < inner; ++i) {
            const double xhat = (xi[i] - mu) * is;
            gx[i] += gm * is * (g[i] - gsum / m - xhat * gxhat / m);
          }
        } else {
          for (int64_t i = 0; i < inner; ++i) gx[i] += gm * is * g[i];
        }
      }
    }
  };
  return finish(make_node(x.shape(), std::move(out)), {px, pg, pb}, std::move(bp));
}

// ---------------------------------------------------------------------------
// Loss heads
// ---------------------------------------------------------------------------

Tensor cross_entropy(const Tensor& logits, int64_t target) {
  check(logits.rank() == 1, "cross_entropy: logits must be a vector");
  const int64_t s_n = logits.dim(0);
  check(target >= 0 && target < s_n, "cross_entropy: target out of range");
  const auto pl = logits.node_ptr();
  double mx = pl->values[0];
  for (int64_t i = 1; i < s_n; ++i) mx = std::max(mx, pl->values[static_cast<size_t>(i)]);
  double z = 0.0;
  std::vector<double> probs(static_cast<size_t>(s_n));
  for (int64_t i = 0; i < s_n; ++i) {
    probs[static_cast<size_t>(i)] = std::exp(pl->values[static_cast<size_t>(i)] - mx);
    z += probs[static_cast<size_t>(i)];
  }
  for (auto& p : probs) p /= z;
  const double loss = -(pl->values[static_cast<size_t>(target)] - mx - std::log(z));
  return finish(make_node({1}, {loss}), {pl}, [pl, probs, target](Node& self) {
    if (!pl->requires_grad) return;
    pl->ensure_grad();
    const double g = self.grad[0];
    for (size_t i = 0; i < probs.size(); ++i)
      pl->grad[i] += g * (probs[i] - (static_cast<int64_t>(i) == target ? 1.0 : 0.0));
  });
}

Tensor aam_margin(const Tensor& cosines, int64_t target, double margin, double scale) {
  check(cosines.rank() == 1, "aam_margin: cosines must be a vector");
  const int64_t s_n = cosines.dim(0);
  check(target >= 0 && target < s_n, "aam_margin: target out of range");
  check(margin >= 0.0 && margin < M_PI / 2.0, "aam_margin: margin must lie in [0, pi/2)");
  const auto pc = cosines.node_ptr();

  const double cos_m = std::cos(margin);
  const double sin_m = std::sin(margin);
  // theta + m <= pi  <=>  cos(theta) >= cos(pi - m) = -cos(m)
  const double flip_at = -cos_m;

  std::vector<double> out(static_cast<size_t>(s_n));
  for (int64_t i = 0; i < s_n; ++i) out[static_cast<size_t>(i)] = scale * pc->values[static_cast<size_t>(i)];
  const double ct = pc->values[static_cast<size_t>(target)];
  bool fallback = false;
  if (ct >= flip_at) {
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    out[static_cast<size_t>(target)] = scale * (ct * cos_m - st * sin_m);
  } else {
    out[static_cast<size_t>(target)] = scale * (ct - margin * sin_m);
    fallback = true;
  }

  return finish(make_node({s_n}, std::move(out)), {pc},
                [pc, target, margin, scale, cos_m, sin_m, fallback](Node& self) {
    (void)margin;
    if (!pc->requires_grad) return;
    pc->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double g = self.grad[i];
      if (g == 0.0) continue;
      if (static_cast<int64_t>(i) != target) {
        pc->grad[i] += g * scale;
        continue;
      }
      if (fallback) {
        pc->grad[i] += g * scale;
      } else {
        const double ct = pc->values[i];
        const double st = std::sqrt(std::max(1e-12, 1.0 - ct * ct));
        // d/dcos cos(theta+m) = cos m + sin m * cos(theta)/sin(theta)
        pc->grad[i] += g * scale * (cos_m + sin_m * ct / st);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Backward sweep
// ---------------------------------------------------------------------------

void backward(const Tensor& root) {
  check(root.numel() == 1, "backward: root must be scalar");
  Node* root_node = root.node_ptr().get();
  if (!root_node->requires_grad) return;  // nothing tracked below

  // Iterative post-order DFS; children (parents in graph terms) first.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root_node, 0);
  visited.insert(root_node);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next].get();
      ++next;
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root_node->ensure_grad();
  root_node->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop) {
      node->ensure_grad();
      node->backprop(*node);
    }
  }
}

}  // namespace svkit

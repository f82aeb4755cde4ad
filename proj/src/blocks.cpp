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

#include "svkit/blocks.hpp"

#include <cmath>
#include <stdexcept>

#include "svkit/error.hpp"

namespace svkit {

Tensor init_uniform(const Shape& shape, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::param(shape, std::move(v));
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(int64_t channels)
    : gamma_(Tensor::param({channels}, std::vector<double>(static_cast<size_t>(channels), 1.0))),
      beta_(Tensor::param({channels}, std::vector<double>(static_cast<size_t>(channels), 0.0))),
      running_mean_(static_cast<size_t>(channels), 0.0),
      running_var_(static_cast<size_t>(channels), 1.0) {}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
  return batch_norm(x, gamma_, beta_, &running_mean_, &running_var_, kMomentum, kEps, training);
}

void BatchNorm::collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers) {
  params.emplace_back(prefix + ".gamma", gamma_);
  params.emplace_back(prefix + ".beta", beta_);
  buffers.emplace_back(prefix + ".running_mean", &running_mean_);
  buffers.emplace_back(prefix + ".running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

LinearLayer::LinearLayer(int64_t d_out, int64_t d_in, Rng& rng)
    : weight_(init_uniform({d_out, d_in}, d_in, rng)),
      bias_(init_uniform({d_out}, d_in, rng)) {}

void LinearLayer::collect(const std::string& prefix, NamedParams& params) {
  params.emplace_back(prefix + ".weight", weight_);
  params.emplace_back(prefix + ".bias", bias_);
}

// ---------------------------------------------------------------------------
// SE / fwSE
// ---------------------------------------------------------------------------

SeBlock::SeBlock(int64_t channels, int64_t bottleneck, Rng& rng)
    : fc1_(bottleneck, channels, rng), fc2_(channels, bottleneck, rng) {
  if (bottleneck < 1) throw std::invalid_argument("se_block: bottleneck must be >= 1");
}

Tensor SeBlock::gates(const Tensor& x) const {
  std::vector<int64_t> axes;
  for (int64_t a = 1; a < x.rank(); ++a) axes.push_back(a);
  const Tensor z = reduce(x, axes, Reduce::kMean);
  const Tensor h = pointwise(fc1_.forward(z), Pointwise::kRelu);
  return pointwise(fc2_.forward(h), Pointwise::kSigmoid);
}

Tensor SeBlock::forward(const Tensor& x) const { return scale_rows(x, gates(x)); }

void SeBlock::collect(const std::string& prefix, NamedParams& params) {
  fc1_.collect(prefix + ".fc1", params);
  fc2_.collect(prefix + ".fc2", params);
}

FwSeBlock::FwSeBlock(int64_t freq_bins, int64_t bottleneck, Rng& rng)
    : freq_bins_(freq_bins), fc1_(bottleneck, freq_bins, rng), fc2_(freq_bins, bottleneck, rng) {
  if (freq_bins < 1) throw std::invalid_argument("fwse_block: F must be >= 1");
  if (bottleneck < 1) throw std::invalid_argument("fwse_block: bottleneck must be >= 1");
}

Tensor FwSeBlock::gates(const Tensor& x) const {
  if (x.rank() != 3) throw std::invalid_argument("fwse_block: input must be (C,F,T)");
  if (x.dim(1) != freq_bins_) throw std::invalid_argument("fwse_block: F mismatch");
  const Tensor z = reduce(x, {0, 2}, Reduce::kMean);  // mean over channel and time
  const Tensor h = pointwise(fc1_.forward(z), Pointwise::kRelu);
  return pointwise(fc2_.forward(h), Pointwise::kSigmoid);
}

Tensor FwSeBlock::forward(const Tensor& x) const { return scale_freq(x, gates(x)); }

void FwSeBlock::collect(const std::string& prefix, NamedParams& params) {
  fc1_.collect(prefix + ".fc1", params);
  fc2_.collect(prefix + ".fc2", params);
}

// ---------------------------------------------------------------------------
// Positional encoding
// ---------------------------------------------------------------------------

FreqPositionalEncoding::FreqPositionalEncoding(int64_t freq_bins)
    : p_(Tensor::param({freq_bins}, std::vector<double>(static_cast<size_t>(freq_bins), 0.0))) {}

void FreqPositionalEncoding::collect(const std::string& prefix, NamedParams& params) {
  params.emplace_back(prefix + ".p", p_);
}

// ---------------------------------------------------------------------------
// Conv stem
// ---------------------------------------------------------------------------

ConvStem::ConvStem(const StemConfig& cfg, Rng& rng)
    : cfg_(cfg),
      conv_in_(init_uniform({cfg.channels, 1, cfg.kernel, cfg.kernel}, cfg.kernel * cfg.kernel, rng)),
      conv_res_a_(init_uniform({cfg.channels, cfg.channels, cfg.kernel, cfg.kernel},
                               cfg.channels * cfg.kernel * cfg.kernel, rng)),
      conv_res_b_(init_uniform({cfg.channels, cfg.channels, cfg.kernel, cfg.kernel},
                               cfg.channels * cfg.kernel * cfg.kernel, rng)),
      conv_out_(init_uniform({cfg.channels, cfg.channels, cfg.kernel, cfg.kernel},
                             cfg.channels * cfg.kernel * cfg.kernel, rng)),
      bn_in_(cfg.channels),
      bn_res_a_(cfg.channels),
      bn_res_b_(cfg.channels),
      bn_out_(cfg.channels) {
  if (cfg.channels < 1) throw ConfigError("conv_stem: channels must be >= 1");
}

Tensor ConvStem::forward(const Tensor& x, bool training) {
  if (x.rank() != 3 || x.dim(0) != 1) throw std::invalid_argument("conv_stem: input must be (1,F,T)");
  if (x.dim(1) % 4 != 0)
    throw ConfigError("conv_stem: F=" + std::to_string(x.dim(1)) + " not divisible by 4");

  Tensor y = pointwise(bn_in_.forward(conv2d(x, conv_in_, 2, 1, Pad::kSame), training), Pointwise::kRelu);
  // residual 2D block, stride 1
  Tensor r = pointwise(bn_res_a_.forward(conv2d(y, conv_res_a_, 1, 1, Pad::kSame), training), Pointwise::kRelu);
  r = bn_res_b_.forward(conv2d(r, conv_res_b_, 1, 1, Pad::kSame), training);
  y = pointwise(add(y, r), Pointwise::kRelu);
  Tensor z = pointwise(bn_out_.forward(conv2d(y, conv_out_, 2, 1, Pad::kSame), training), Pointwise::kRelu);
  return reshape(z, {z.dim(0) * z.dim(1), z.dim(2)});
}

void ConvStem::collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers) {
  params.emplace_back(prefix + ".conv_in", conv_in_);
  params.emplace_back(prefix + ".conv_res_a", conv_res_a_);
  params.emplace_back(prefix + ".conv_res_b", conv_res_b_);
  params.emplace_back(prefix + ".conv_out", conv_out_);
  bn_in_.collect(prefix + ".bn_in", params, buffers);
  bn_res_a_.collect(prefix + ".bn_res_a", params, buffers);
  bn_res_b_.collect(prefix + ".bn_res_b", params, buffers);
  bn_out_.collect(prefix + ".bn_out", params, buffers);
}

// ---------------------------------------------------------------------------
// Res2 dilated block
// ---------------------------------------------------------------------------

Res2DilatedBlock::Res2DilatedBlock(int64_t channels, int64_t scale, int64_t dilation,
                                   bool with_se, int64_t se_bottleneck, Rng& rng)
    : channels_(channels),
      scale_(scale),
      dilation_(dilation),
      with_se_(with_se),
      conv_in_(init_uniform({channels, channels, 1}, channels, rng)),
      conv_out_(init_uniform({channels, channels, 1}, channels, rng)),
      bn_in_(channels),
      bn_out_(channels) {
  if (scale < 1) throw ConfigError("res2_dilated_block: scale must be >= 1");
  if (channels % scale != 0)
    throw ConfigError("res2_dilated_block: channels " + std::to_string(channels) +
                      " not divisible by scale " + std::to_string(scale));
  const int64_t group = channels / scale;
  for (int64_t g = 0; g < scale; ++g)
    group_convs_.push_back(init_uniform({group, group, 3}, group * 3, rng));
  if (with_se) se_.emplace_back(channels, se_bottleneck, rng);
}

Tensor Res2DilatedBlock::forward(const Tensor& x, bool training) {
  if (x.rank() != 2 || x.dim(0) != channels_)
    throw std::invalid_argument("res2_dilated_block: input must be (C,T)");
  Tensor u = bn_in_.forward(pointwise(conv1d_dilated(x, conv_in_, 1), Pointwise::kRelu), training);

  const int64_t group = channels_ / scale_;
  std::vector<Tensor> ys;
  Tensor carry;
  for (int64_t g = 0; g < scale_; ++g) {
    Tensor part = narrow_rows(u, g * group, group);
    if (g > 0) part = add(part, carry);
    carry = conv1d_dilated(part, group_convs_[static_cast<size_t>(g)], dilation_);
    ys.push_back(carry);
  }
  Tensor y = scale_ == 1 ? ys[0] : concat_rows(ys);

  Tensor v = bn_out_.forward(pointwise(conv1d_dilated(y, conv_out_, 1), Pointwise::kRelu), training);
  if (with_se_) v = se_[0].forward(v);
  return add(x, v);
}

void Res2DilatedBlock::collect(const std::string& prefix, NamedParams& params, NamedBuffers& buffers) {
  params.emplace_back(prefix + ".conv_in", conv_in_);
  for (size_t g = 0; g < group_convs_.size(); ++g)
    params.emplace_back(prefix + ".group" + std::to_string(g), group_convs_[g]);
  params.emplace_back(prefix + ".conv_out", conv_out_);
  bn_in_.collect(prefix + ".bn_in", params, buffers);
  bn_out_.collect(prefix + ".bn_out", params, buffers);
  if (with_se_) se_[0].collect(prefix + ".se", params);
}

// ---------------------------------------------------------------------------
// Attentive statistics pooling
// ---------------------------------------------------------------------------

AttentiveStatsPool::AttentiveStatsPool(int64_t channels, int64_t hidden, Rng& rng)
    : w1_(init_uniform({hidden, 3 * channels, 1}, 3 * channels, rng)),
      b1_(init_uniform({hidden}, 3 * channels, rng)),
      w2_(init_uniform({channels, hidden, 1}, hidden, rng)),
      b2_(init_uniform({channels}, hidden, rng)) {}

Tensor AttentiveStatsPool::forward(const Tensor& h) const {
  if (h.rank() != 2) throw std::invalid_argument("attentive_stats_pool: input must be (C,T)");
  const int64_t t_len = h.dim(1);
  if (t_len < 2) throw std::invalid_argument("attentive_stats_pool: needs T >= 2");

  const Tensor mu = reduce(h, {1}, Reduce::kMean);
  const Tensor sd = reduce(h, {1}, Reduce::kStd);
  const Tensor ctx = concat_rows({h, tile_cols(mu, t_len), tile_cols(sd, t_len)});

  Tensor a = pointwise(add_row_bias(conv1d_dilated(ctx, w1_, 1), b1_), Pointwise::kTanh);
  Tensor logits = add_row_bias(conv1d_dilated(a, w2_, 1), b2_);
  const Tensor alpha = softmax_rows(logits);

  const Tensor wmean = reduce(mul(alpha, h), {1}, Reduce::kSum);
  const Tensor wsq = reduce(mul(alpha, mul(h, h)), {1}, Reduce::kSum);
  Tensor var = pointwise(sub(wsq, mul(wmean, wmean)), Pointwise::kRelu);
  const Tensor wstd = pointwise(add_scalar(var, 1e-8), Pointwise::kSqrt);
  return concat_rows({wmean, wstd});
}

void AttentiveStatsPool::collect(const std::string& prefix, NamedParams& params) {
  params.emplace_back(prefix + ".w1", w1_);
  params.emplace_back(prefix + ".b1", b1_);
  params.emplace_back(prefix + ".w2", w2_);
  params.emplace_back(prefix + ".b2", b2_);
}

}  // namespace svkit

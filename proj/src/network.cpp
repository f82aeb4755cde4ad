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

#include "svkit/network.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "svkit/error.hpp"
#include "svkit/tensor_io.hpp"

namespace svkit {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kEcapaTdnn: return "ecapa_tdnn";
    case Variant::kEcapaCnnTdnn: return "ecapa_cnn_tdnn";
    case Variant::kSeResNet: return "se_resnet";
    case Variant::kFwseResNetPosenc: return "fwse_resnet_posenc";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "ecapa_tdnn") return Variant::kEcapaTdnn;
  if (name == "ecapa_cnn_tdnn") return Variant::kEcapaCnnTdnn;
  if (name == "se_resnet") return Variant::kSeResNet;
  if (name == "fwse_resnet_posenc") return Variant::kFwseResNetPosenc;
  throw ConfigError("unknown variant: " + name);
}

namespace {

void apply_variant_flags(NetworkConfig& cfg) {
  cfg.use_fwse = cfg.variant == Variant::kFwseResNetPosenc;
  cfg.use_posenc = cfg.variant == Variant::kFwseResNetPosenc;
  cfg.use_se = cfg.variant == Variant::kSeResNet;
  const bool resnet = cfg.variant == Variant::kSeResNet || cfg.variant == Variant::kFwseResNetPosenc;
  cfg.subcenters = resnet ? 2 : 1;
}

}  // namespace

NetworkConfig NetworkConfig::toy(Variant v) {
  NetworkConfig cfg;
  cfg.variant = v;
  cfg.n_mels = 32;
  cfg.emb_dim = 64;
  cfg.ecapa_channels = 64;
  cfg.ecapa_dilations = {2, 3, 4};
  cfg.ecapa_scale = 4;
  cfg.mfa_dim = 128;
  cfg.att_hidden = 32;
  cfg.se_bottleneck = 16;  // C/4
  cfg.stem.channels = 16;
  cfg.stem.kernel = 3;
  cfg.resnet_widths = {16, 32, 64, 128};
  cfg.resnet_blocks = {1, 1, 1, 1};
  apply_variant_flags(cfg);
  return cfg;
}

NetworkConfig NetworkConfig::full(Variant v) {
  NetworkConfig cfg;
  cfg.variant = v;
  apply_variant_flags(cfg);
  return cfg;
}

NetworkConfig NetworkConfig::preset(const std::string& name, Variant v) {
  if (name == "toy") return toy(v);
  if (name == "full") return full(v);
  throw ConfigError("unknown preset: " + name);
}

int64_t Network::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

// ---------------------------------------------------------------------------
// ECAPA (CNN-)TDNN
// ---------------------------------------------------------------------------

namespace {

class EcapaNetwork : public Network {
 public:
  EcapaNetwork(const NetworkConfig& cfg, Rng& rng) : Network(cfg) {
    const bool with_stem = cfg.variant == Variant::kEcapaCnnTdnn;
    int64_t in_channels = cfg.n_mels;
    if (with_stem) {
      if (cfg.n_mels % 4 != 0) throw ConfigError("ecapa_cnn_tdnn: n_mels must be divisible by 4");
      stem_ = std::make_unique<ConvStem>(cfg.stem, rng);
      in_channels = stem_->out_channels(cfg.n_mels);
    }
    const int64_t c = cfg.ecapa_channels;
    conv1_ = init_uniform({c, in_channels, 5}, in_channels * 5, rng);
    bn1_ = std::make_unique<BatchNorm>(c);
    for (int64_t d : cfg.ecapa_dilations)
      blocks_.push_back(std::make_unique<Res2DilatedBlock>(c, cfg.ecapa_scale, d, true,
                                                           cfg.se_bottleneck, rng));
    const int64_t cat = c * static_cast<int64_t>(cfg.ecapa_dilations.size());
    mfa_conv_ = init_uniform({cfg.mfa_dim, cat, 1}, cat, rng);
    mfa_bn_ = std::make_unique<BatchNorm>(cfg.mfa_dim);
    pool_ = std::make_unique<AttentiveStatsPool>(cfg.mfa_dim, cfg.att_hidden, rng);
    emb_ = std::make_unique<LinearLayer>(cfg.emb_dim, 2 * cfg.mfa_dim, rng);

    if (stem_) stem_->collect("stem", params_, buffers_);
    params_.emplace_back("conv1", conv1_);
    bn1_->collect("bn1", params_, buffers_);
    for (size_t b = 0; b < blocks_.size(); ++b)
      blocks_[b]->collect("block" + std::to_string(b), params_, buffers_);
    params_.emplace_back("mfa.conv", mfa_conv_);
    mfa_bn_->collect("mfa.bn", params_, buffers_);
    pool_->collect("pool", params_);
    emb_->collect("emb", params_);
  }

  ForwardOut forward(const Tensor& features, bool training) override {
    if (features.rank() != 2 || features.dim(0) != cfg_.n_mels)
      throw ConfigError("ecapa: features must be (" + std::to_string(cfg_.n_mels) + ",T)");
    Tensor x = features;
    if (stem_) x = stem_->forward(reshape(x, {1, x.dim(0), x.dim(1)}), training);
    Tensor h = bn1_->forward(pointwise(conv1d_dilated(x, conv1_, 1), Pointwise::kRelu), training);
    std::vector<Tensor> taps;
    for (auto& block : blocks_) {
      h = block->forward(h, training);
      taps.push_back(h);
    }
    Tensor cat = concat_rows(taps);
    Tensor mfa = mfa_bn_->forward(pointwise(conv1d_dilated(cat, mfa_conv_, 1), Pointwise::kRelu), training);
    Tensor pooled = pool_->forward(mfa);
    return {emb_->forward(pooled), pooled};
  }

 private:
  std::unique_ptr<ConvStem> stem_;
  Tensor conv1_;
  std::unique_ptr<BatchNorm> bn1_;
  std::vector<std::unique_ptr<Res2DilatedBlock>> blocks_;
  Tensor mfa_conv_;
  std::unique_ptr<BatchNorm> mfa_bn_;
  std::unique_ptr<AttentiveStatsPool> pool_;
  std::unique_ptr<LinearLayer> emb_;
};

}  // namespace

// ---------------------------------------------------------------------------
// (fw)SE-ResNet
// ---------------------------------------------------------------------------

struct ResNetNetwork::BlockParams {
  int64_t in_channels, out_channels, stride, f_in, f_out;
  Tensor conv1, conv2, conv_skip;  // conv_skip undefined for identity skips
  std::unique_ptr<BatchNorm> bn1, bn2, bn_skip;
  std::unique_ptr<SeBlock> se;
  std::unique_ptr<FwSeBlock> fwse;
  std::unique_ptr<FreqPositionalEncoding> posenc;
};

ResNetNetwork::~ResNetNetwork() = default;

ResNetNetwork::ResNetNetwork(const NetworkConfig& cfg, Rng& rng) : Network(cfg) {
  if (cfg.resnet_widths.size() != cfg.resnet_blocks.size() || cfg.resnet_widths.empty())
    throw ConfigError("resnet: widths and block counts must align");
  const int64_t w0 = cfg.resnet_widths[0];
  conv_stem_ = init_uniform({w0, 1, 3, 3}, 9, rng);
  bn_stem_ = std::make_unique<BatchNorm>(w0);

  int64_t channels = w0;
  int64_t f = cfg.n_mels;
  for (size_t stage = 0; stage < cfg.resnet_widths.size(); ++stage) {
    const int64_t width = cfg.resnet_widths[stage];
    for (int64_t b = 0; b < cfg.resnet_blocks[stage]; ++b) {
      auto blk = std::make_unique<BlockParams>();
      blk->stride = (stage > 0 && b == 0) ? 2 : 1;
      blk->in_channels = channels;
      blk->out_channels = width;
      blk->f_in = f;
      blk->f_out = (f + blk->stride - 1) / blk->stride;
      blk->conv1 = init_uniform({width, channels, 3, 3}, channels * 9, rng);
      blk->bn1 = std::make_unique<BatchNorm>(width);
      blk->conv2 = init_uniform({width, width, 3, 3}, width * 9, rng);
      blk->bn2 = std::make_unique<BatchNorm>(width);
      if (blk->stride != 1 || channels != width) {
        blk->conv_skip = init_uniform({width, channels, 1, 1}, channels, rng);
        blk->bn_skip = std::make_unique<BatchNorm>(width);
      }
      if (cfg.use_fwse) {
        blk->fwse = std::make_unique<FwSeBlock>(blk->f_out, std::max<int64_t>(1, width / 4), rng);
      } else if (cfg.use_se) {
        blk->se = std::make_unique<SeBlock>(width, std::max<int64_t>(1, width / 4), rng);
      }
      if (cfg.use_posenc) blk->posenc = std::make_unique<FreqPositionalEncoding>(blk->f_in);
      blocks_.push_back(std::move(blk));
      channels = width;
      f = blocks_.back()->f_out;
    }
  }
  const int64_t flat = channels * f;
  pool_ = std::make_unique<AttentiveStatsPool>(flat, cfg.att_hidden, rng);
  emb_ = std::make_unique<LinearLayer>(cfg.emb_dim, 2 * flat, rng);

  params_.emplace_back("stem.conv", conv_stem_);
  bn_stem_->collect("stem.bn", params_, buffers_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    auto& blk = *blocks_[i];
    params_.emplace_back(p + ".conv1", blk.conv1);
    blk.bn1->collect(p + ".bn1", params_, buffers_);
    params_.emplace_back(p + ".conv2", blk.conv2);
    blk.bn2->collect(p + ".bn2", params_, buffers_);
    if (blk.conv_skip.defined()) {
      params_.emplace_back(p + ".conv_skip", blk.conv_skip);
      blk.bn_skip->collect(p + ".bn_skip", params_, buffers_);
    }
    if (blk.se) blk.se->collect(p + ".se", params_);
    if (blk.fwse) blk.fwse->collect(p + ".fwse", params_);
    if (blk.posenc) blk.posenc->collect(p + ".posenc", params_);
  }
  pool_->collect("pool", params_);
  emb_->collect("emb", params_);
}

Tensor ResNetNetwork::run_block(BlockParams& b, const Tensor& x, bool training) {
  // positional encoding is added after the skip connection branches off
  Tensor main_in = b.posenc ? b.posenc->apply(x) : x;
  Tensor m = pointwise(b.bn1->forward(conv2d(main_in, b.conv1, b.stride, b.stride, Pad::kSame), training),
                       Pointwise::kRelu);
  m = b.bn2->forward(conv2d(m, b.conv2, 1, 1, Pad::kSame), training);
  if (b.fwse) {
    m = b.fwse->forward(m);
  } else if (b.se) {
    m = b.se->forward(m);
  }
  Tensor skip = x;
  if (b.conv_skip.defined())
    skip = b.bn_skip->forward(conv2d(x, b.conv_skip, b.stride, b.stride, Pad::kSame), training);
  return pointwise(add(m, skip), Pointwise::kRelu);
}

Tensor ResNetNetwork::trunk(const Tensor& features, bool training) {
  if (features.rank() != 2 || features.dim(0) != cfg_.n_mels)
    throw ConfigError("resnet: features must be (" + std::to_string(cfg_.n_mels) + ",T)");
  Tensor x = reshape(features, {1, features.dim(0), features.dim(1)});
  x = pointwise(bn_stem_->forward(conv2d(x, conv_stem_, 1, 1, Pad::kSame), training), Pointwise::kRelu);
  for (auto& b : blocks_) x = run_block(*b, x, training);
  return x;
}

Network::ForwardOut ResNetNetwork::forward(const Tensor& features, bool training) {
  Tensor x = trunk(features, training);
  Tensor flat = reshape(x, {x.dim(0) * x.dim(1), x.dim(2)});
  Tensor pooled = pool_->forward(flat);
  return {emb_->forward(pooled), pooled};
}

Tensor ResNetNetwork::global_mean_pool(const Tensor& features, bool training) {
  return reduce(trunk(features, training), {1, 2}, Reduce::kMean);
}

std::unique_ptr<Network> build_network(const NetworkConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  switch (cfg.variant) {
    case Variant::kEcapaTdnn:
    case Variant::kEcapaCnnTdnn:
      return std::make_unique<EcapaNetwork>(cfg, rng);
    case Variant::kSeResNet:
    case Variant::kFwseResNetPosenc:
      return std::make_unique<ResNetNetwork>(cfg, rng);
  }
  throw ConfigError("unknown variant");
}

int64_t copy_matching_state(Network& dst, const Network& src) {
  std::map<std::string, const Tensor*> src_params;
  for (const auto& [name, t] : const_cast<Network&>(src).params()) src_params[name] = &t;
  int64_t copied = 0;
  for (auto& [name, t] : dst.params()) {
    auto it = src_params.find(name);
    if (it == src_params.end()) continue;
    if (it->second->shape() != t.shape()) throw ConfigError("state copy: shape mismatch for " + name);
    t.mutable_values() = it->second->values();
    ++copied;
  }
  std::map<std::string, const std::vector<double>*> src_bufs;
  for (const auto& [name, v] : const_cast<Network&>(src).buffers()) src_bufs[name] = v;
  for (auto& [name, v] : dst.buffers()) {
    auto it = src_bufs.find(name);
    if (it == src_bufs.end()) continue;
    if (it->second->size() != v->size()) throw ConfigError("state copy: size mismatch for " + name);
    *v = *it->second;
    ++copied;
  }
  return copied;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& base, const NamedParams& params,
                     const NamedBuffers& buffers, const std::string& config_hash) {
  std::ofstream man(base + ".manifest");
  if (!man) throw DataError("cannot write checkpoint manifest: " + base + ".manifest");
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw DataError("cannot write checkpoint payload: " + base + ".bin");

  man << "svkit-checkpoint v1 " << config_hash << "\n";
  for (const auto& [name, t] : params) {
    man << "param " << name;
    for (int64_t a = 0; a < t.rank(); ++a) man << " " << t.dim(a);
    man << "\n";
    write_tensor(bin, t);
  }
  for (const auto& [name, v] : buffers) {
    man << "buffer " << name << " " << v->size() << "\n";
    write_tensor(bin, Tensor::from({static_cast<int64_t>(v->size())}, *v));
  }
  if (!man || !bin) throw DataError("checkpoint write failed: " + base);
}

bool checkpoint_exists(const std::string& base) {
  std::ifstream man(base + ".manifest");
  return static_cast<bool>(man);
}

void load_checkpoint(const std::string& base, NamedParams& params,
                     NamedBuffers& buffers, const std::string& expected_config_hash,
                     bool allow_extra) {
  std::ifstream man(base + ".manifest");
  if (!man) throw DataError("cannot open checkpoint manifest: " + base + ".manifest");
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw DataError("cannot open checkpoint payload: " + base + ".bin");

  std::string header, version, hash;
  man >> header >> version >> hash;
  if (header != "svkit-checkpoint" || version != "v1")
    throw DataError("bad checkpoint header: " + base);
  if (!expected_config_hash.empty() && hash != expected_config_hash)
    throw ConfigError("checkpoint config hash " + hash + " does not match expected " +
                      expected_config_hash);

  std::map<std::string, Tensor*> by_name;
  for (auto& [name, t] : params) by_name[name] = &t;
  std::map<std::string, std::vector<double>*> buf_by_name;
  for (auto& [name, v] : buffers) buf_by_name[name] = v;

  std::string kind;
  std::string line;
  std::getline(man, line);  // finish header line
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    ls >> kind >> name;
    Tensor t = read_tensor(bin);
    if (kind == "param") {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        if (allow_extra) continue;
        throw DataError("checkpoint param not in model: " + name);
      }
      if (it->second->shape() != t.shape()) throw DataError("checkpoint shape mismatch: " + name);
      it->second->mutable_values() = t.values();
    } else if (kind == "buffer") {
      auto it = buf_by_name.find(name);
      if (it == buf_by_name.end()) {
        if (allow_extra) continue;
        throw DataError("checkpoint buffer not in model: " + name);
      }
      if (it->second->size() != t.values().size()) throw DataError("checkpoint buffer size mismatch: " + name);
      *it->second = t.values();
    } else {
      throw DataError("bad checkpoint record: " + line);
    }
  }
}

}  // namespace svkit

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

#ifndef SVKIT_NETWORK_HPP_
#define SVKIT_NETWORK_HPP_

#include <memory>
#include <string>
#include <vector>

#include "svkit/blocks.hpp"
#include "svkit/features.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

enum class Variant { kEcapaTdnn, kEcapaCnnTdnn, kSeResNet, kFwseResNetPosenc };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct NetworkConfig {
  Variant variant = Variant::kEcapaTdnn;
  int64_t n_mels = 80;
  int64_t emb_dim = 192;

  // ECAPA trunk
  int64_t ecapa_channels = 2048;
  std::vector<int64_t> ecapa_dilations = {2, 3, 4, 5};
  int64_t ecapa_scale = 8;
  int64_t mfa_dim = 1536;
  int64_t att_hidden = 128;
  int64_t se_bottleneck = 128;

  // 2D stem (CNN-TDNN)
  StemConfig stem;

  // ResNet trunk
  std::vector<int64_t> resnet_widths = {32, 64, 128, 256};
  std::vector<int64_t> resnet_blocks = {3, 4, 6, 3};

  // ResNet feature knobs; the public variants fix these, tests may not.
  bool use_fwse = false;
  bool use_posenc = false;
  bool use_se = true;

  int64_t subcenters = 1;  // 2 for the ResNet variants by default

  static NetworkConfig toy(Variant v);
  static NetworkConfig full(Variant v);
  static NetworkConfig preset(const std::string& name, Variant v);
};

class Network {
 public:
  virtual ~Network() = default;

  struct ForwardOut {
    Tensor embedding;  // (emb_dim)
    Tensor pooled;     // pooling-layer output (2 * pooled channels)
  };

  // features (n_mels, T)
  virtual ForwardOut forward(const Tensor& features, bool training) = 0;
  Tensor embed(const Tensor& features, bool training) { return forward(features, training).embedding; }

  const NetworkConfig& config() const { return cfg_; }
  NamedParams& params() { return params_; }
  NamedBuffers& buffers() { return buffers_; }
  int64_t param_count() const;

 protected:
  explicit Network(const NetworkConfig& cfg) : cfg_(cfg) {}
  NetworkConfig cfg_;
  NamedParams params_;
  NamedBuffers buffers_;
};

std::unique_ptr<Network> build_network(const NetworkConfig& cfg, uint64_t seed);

// Copies every parameter and buffer whose name exists in both networks.
// Returns the number of tensors copied.
int64_t copy_matching_state(Network& dst, const Network& src);

// ResNet with per-stage residual blocks; exposed for the frequency-shift
// diagnostics which need the trunk output and a global-mean pooling view.
class ResNetNetwork : public Network {
 public:
  ResNetNetwork(const NetworkConfig& cfg, Rng& rng);
  ~ResNetNetwork() override;
  ForwardOut forward(const Tensor& features, bool training) override;
  // Final (C,F,T) feature map before flattening.
  Tensor trunk(const Tensor& features, bool training);
  // Mean over frequency and time of the trunk output, (C).
  Tensor global_mean_pool(const Tensor& features, bool training);

 private:
  struct BlockParams;
  Tensor run_block(BlockParams& b, const Tensor& x, bool training);

  Tensor conv_stem_;
  std::unique_ptr<BatchNorm> bn_stem_;
  std::vector<std::unique_ptr<BlockParams>> blocks_;
  std::unique_ptr<AttentiveStatsPool> pool_;
  std::unique_ptr<LinearLayer> emb_;
};

// Checkpoints: <base>.manifest (text) + <base>.bin (tensor records).
void save_checkpoint(const std::string& base, const NamedParams& params,
                     const NamedBuffers& buffers, const std::string& config_hash);
// allow_extra: checkpoint records with no counterpart in the model are
// skipped (embedding extraction does not rebuild the classification head).
void load_checkpoint(const std::string& base, NamedParams& params,
                     NamedBuffers& buffers, const std::string& expected_config_hash,
                     bool allow_extra = false);
bool checkpoint_exists(const std::string& base);

}  // namespace svkit

#endif  // SVKIT_NETWORK_HPP_

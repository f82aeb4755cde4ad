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

#ifndef SVKIT_CONFIG_HPP_
#define SVKIT_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "svkit/network.hpp"
#include "svkit/train.hpp"

namespace svkit {

struct StageConfig {
  int64_t iterations = 2000;
  int64_t batch_size = 64;
  double crop_s = 2.0;
  double margin = 0.2;
  double aam_scale = 30.0;
  int64_t specaug_f = 10;
  int64_t specaug_t = 5;
  CyclicalLr schedule;
  double stop_accuracy = -1.0;
  // fine-tuning extras
  int64_t balance_count = 0;
  std::string in_domain;
};

// The experiment description: JSON on disk, strict keys, exact round-trip.
struct ExperimentConfig {
  std::string variant = "ecapa_tdnn";
  std::string preset = "toy";
  uint64_t seed = 1;
  std::string train_list;  // metadata.tsv path

  // optional network overrides
  std::optional<int64_t> n_mels;
  std::optional<int64_t> emb_dim;

  StageConfig base;
  StageConfig lmft;
  bool lmft_enabled = false;

  std::vector<std::string> qms;           // duration | enroll_count | language
  std::vector<double> fusion_weights;

  static ExperimentConfig defaults();
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);

  NetworkConfig network_config() const;
  DecayGroups decay_groups() const { return DecayGroups{}; }
  // FNV-1a over the canonical JSON; versions checkpoints.
  std::string hash() const;
};

}  // namespace svkit

#endif  // SVKIT_CONFIG_HPP_

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

#include "svkit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "svkit/error.hpp"

namespace svkit {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "' in " + where);
  }
}

json stage_to_json(const StageConfig& s) {
  json j;
  j["iterations"] = s.iterations;
  j["batch_size"] = s.batch_size;
  j["crop_s"] = s.crop_s;
  j["margin"] = s.margin;
  j["aam_scale"] = s.aam_scale;
  j["specaug_f"] = s.specaug_f;
  j["specaug_t"] = s.specaug_t;
  j["cycle_len"] = s.schedule.cycle_len;
  j["lr_min"] = s.schedule.lr_min;
  j["lr_max"] = s.schedule.lr_max;
  j["stop_accuracy"] = s.stop_accuracy;
  j["balance_count"] = s.balance_count;
  j["in_domain"] = s.in_domain;
  return j;
}

StageConfig stage_from_json(const json& j, const StageConfig& defaults, const std::string& where) {
  check_keys(j, {"iterations", "batch_size", "crop_s", "margin", "aam_scale", "specaug_f",
                 "specaug_t", "cycle_len", "lr_min", "lr_max", "stop_accuracy", "balance_count",
                 "in_domain"},
             where);
  StageConfig s = defaults;
  if (j.contains("iterations")) s.iterations = j["iterations"].get<int64_t>();
  if (j.contains("batch_size")) s.batch_size = j["batch_size"].get<int64_t>();
  if (j.contains("crop_s")) s.crop_s = j["crop_s"].get<double>();
  if (j.contains("margin")) s.margin = j["margin"].get<double>();
  if (j.contains("aam_scale")) s.aam_scale = j["aam_scale"].get<double>();
  if (j.contains("specaug_f")) s.specaug_f = j["specaug_f"].get<int64_t>();
  if (j.contains("specaug_t")) s.specaug_t = j["specaug_t"].get<int64_t>();
  if (j.contains("cycle_len")) s.schedule.cycle_len = j["cycle_len"].get<int64_t>();
  if (j.contains("lr_min")) s.schedule.lr_min = j["lr_min"].get<double>();
  if (j.contains("lr_max")) s.schedule.lr_max = j["lr_max"].get<double>();
  if (j.contains("stop_accuracy")) s.stop_accuracy = j["stop_accuracy"].get<double>();
  if (j.contains("balance_count")) s.balance_count = j["balance_count"].get<int64_t>();
  if (j.contains("in_domain")) s.in_domain = j["in_domain"].get<std::string>();
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.lmft.crop_s = 3.0;
  cfg.lmft.margin = 0.3;
  cfg.lmft.iterations = 500;
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["variant"] = variant;
  j["preset"] = preset;
  j["seed"] = seed;
  j["train_list"] = train_list;
  if (n_mels) j["n_mels"] = *n_mels;
  if (emb_dim) j["emb_dim"] = *emb_dim;
  j["base"] = stage_to_json(base);
  j["lmft_enabled"] = lmft_enabled;
  j["lmft"] = stage_to_json(lmft);
  j["qms"] = qms;
  j["fusion_weights"] = fusion_weights;
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(j, {"variant", "preset", "seed", "train_list", "n_mels", "emb_dim", "base",
                 "lmft_enabled", "lmft", "qms", "fusion_weights"},
             "config root");
  ExperimentConfig cfg = defaults();
  if (j.contains("variant")) cfg.variant = j["variant"].get<std::string>();
  if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("train_list")) cfg.train_list = j["train_list"].get<std::string>();
  if (j.contains("n_mels")) cfg.n_mels = j["n_mels"].get<int64_t>();
  if (j.contains("emb_dim")) cfg.emb_dim = j["emb_dim"].get<int64_t>();
  if (j.contains("base")) cfg.base = stage_from_json(j["base"], cfg.base, "base");
  if (j.contains("lmft_enabled")) cfg.lmft_enabled = j["lmft_enabled"].get<bool>();
  if (j.contains("lmft")) cfg.lmft = stage_from_json(j["lmft"], cfg.lmft, "lmft");
  if (j.contains("qms")) cfg.qms = j["qms"].get<std::vector<std::string>>();
  if (j.contains("fusion_weights"))
    cfg.fusion_weights = j["fusion_weights"].get<std::vector<double>>();
  variant_from_name(cfg.variant);  // validate
  for (const auto& qm : cfg.qms)
    if (qm != "duration" && qm != "enroll_count" && qm != "language")
      throw ConfigError("unknown qm: " + qm);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write config: " + path);
  os << to_json();
}

NetworkConfig ExperimentConfig::network_config() const {
  NetworkConfig cfg = NetworkConfig::preset(preset, variant_from_name(variant));
  if (n_mels) cfg.n_mels = *n_mels;
  if (emb_dim) cfg.emb_dim = *emb_dim;
  return cfg;
}

std::string ExperimentConfig::hash() const {
  // configuration fields that shape the checkpoint tensors
  json j;
  j["variant"] = variant;
  j["preset"] = preset;
  if (n_mels) j["n_mels"] = *n_mels;
  if (emb_dim) j["emb_dim"] = *emb_dim;
  const std::string canon = j.dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace svkit

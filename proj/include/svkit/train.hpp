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

#ifndef SVKIT_TRAIN_HPP_
#define SVKIT_TRAIN_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "svkit/features.hpp"
#include "svkit/loss.hpp"
#include "svkit/network.hpp"
#include "svkit/rng.hpp"

namespace svkit {

// triangular2 cyclical schedule: lr climbs lr_min -> lr_max over the first
// half cycle, descends symmetrically, and the amplitude halves after every
// full cycle. cycle_len is the full (up + down) period.
struct CyclicalLr {
  double lr_min = 1e-8;
  double lr_max = 1e-3;
  int64_t cycle_len = 130000;
};

double lr_at(const CyclicalLr& schedule, int64_t t);

struct DecayGroups {
  double aam_decay = 2e-4;
  double other_decay = 2e-5;
};

// Bias-corrected Adam with decoupled per-group weight decay
// (param -= lr * decay * param, outside the moment estimates).
class AdamOptimizer {
 public:
  struct Hyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamOptimizer() = default;
  explicit AdamOptimizer(Hyper hyper) : hyper_(hyper) {}

  void add_params(const NamedParams& params, double decay);
  void step(double lr);
  void zero_grad();
  int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    Tensor param;
    double decay;
    std::vector<double> m, v;
  };
  Hyper hyper_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
};

// One training utterance with precomputed full-length features.
struct TrainUtterance {
  std::string id;
  int64_t speaker = 0;
  std::string domain;
  FeatureMatrix features;
};

// Emits pools holding one utterance per selected speaker per domain; the
// designated in-domain set contributes all its speakers, every other domain
// a fresh random subset of balance_count speakers per pool.
class DomainBalancedSampler {
 public:
  DomainBalancedSampler(const std::vector<TrainUtterance>& data, int64_t balance_count,
                        const std::string& in_domain);
  std::vector<int64_t> next_batch(int64_t batch_size, Rng& rng);
  int64_t pool_size() const;  // size of a freshly generated pool

  // exposed for the balance tests
  std::vector<int64_t> make_pool(Rng& rng);

 private:
  struct Domain {
    std::string name;
    bool in_domain = false;
    std::vector<std::pair<int64_t, std::vector<int64_t>>> speakers;  // speaker -> utt indices
  };
  std::vector<Domain> domains_;
  int64_t balance_count_;
  std::vector<int64_t> pool_;
  size_t pool_pos_ = 0;
};

// Plain epoch shuffling over all utterances (base training stage).
class ShuffleSampler {
 public:
  explicit ShuffleSampler(int64_t count) : count_(count) {}
  std::vector<int64_t> next_batch(int64_t batch_size, Rng& rng);

 private:
  int64_t count_;
  std::vector<int64_t> order_;
  size_t pos_ = 0;
};

struct TrainOptions {
  int64_t iterations = 2000;
  int64_t batch_size = 64;
  double crop_s = 2.0;
  int64_t specaug_f = 10;
  int64_t specaug_t = 5;
  CyclicalLr schedule;
  DecayGroups decay;
  uint64_t seed = 1;
  // early stop once the trailing-window mean accuracy reaches this (if > 0)
  double stop_accuracy = -1.0;
  int64_t stop_window = 20;
  // domain-balanced sampling (the fine-tuning stage)
  bool domain_balanced = false;
  int64_t balance_count = 0;
  std::string in_domain;
};

struct TrainRecord {
  int64_t iter;
  double loss;
  double lr;
  double acc;
};

struct TrainResult {
  std::vector<TrainRecord> log;
  int64_t iterations_run = 0;
};

// Runs the optimization loop: crop, SpecAugment, mean-normalize, forward,
// AAM loss averaged over the batch, backward, Adam with the cyclical rate.
// checkpoint_hook, when set, fires every half cycle. Throws NumericError on
// divergence (non-finite loss).
TrainResult train_loop(Network& net, AamHead& head, const std::vector<TrainUtterance>& data,
                       const TrainOptions& options,
                       const std::function<void(int64_t)>& checkpoint_hook = {});

}  // namespace svkit

#endif  // SVKIT_TRAIN_HPP_

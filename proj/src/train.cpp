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

#include "svkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "svkit/error.hpp"

namespace svkit {

double lr_at(const CyclicalLr& schedule, int64_t t) {
  if (t < 0) throw std::invalid_argument("lr_at: t must be >= 0");
  if (schedule.cycle_len < 2) throw std::invalid_argument("lr_at: cycle_len must be >= 2");
  const int64_t cycle = t / schedule.cycle_len;
  const int64_t u = t % schedule.cycle_len;
  const double half = static_cast<double>(schedule.cycle_len) / 2.0;
  const double tri = u <= half ? static_cast<double>(u) / half
                               : static_cast<double>(schedule.cycle_len - u) / half;
  // amplitude halves each completed cycle (triangular2); ldexp keeps it exact
  const double amp = std::ldexp(schedule.lr_max - schedule.lr_min, -static_cast<int>(std::min<int64_t>(cycle, 60)));
  return schedule.lr_min + amp * tri;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void AdamOptimizer::add_params(const NamedParams& params, double decay) {
  for (const auto& [name, t] : params) {
    Slot slot;
    slot.param = t;
    slot.decay = decay;
    slot.m.assign(static_cast<size_t>(t.numel()), 0.0);
    slot.v.assign(static_cast<size_t>(t.numel()), 0.0);
    slots_.push_back(std::move(slot));
  }
}

void AdamOptimizer::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  for (auto& slot : slots_) {
    auto& p = slot.param.mutable_values();
    const auto& g = slot.param.grad();
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (size_t i = 0; i < p.size(); ++i) {
      slot.m[i] = hyper_.beta1 * slot.m[i] + (1.0 - hyper_.beta1) * g[i];
      slot.v[i] = hyper_.beta2 * slot.v[i] + (1.0 - hyper_.beta2) * g[i] * g[i];
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + hyper_.eps);
      p[i] -= lr * slot.decay * p[i];
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& slot : slots_) slot.param.zero_grad();
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

DomainBalancedSampler::DomainBalancedSampler(const std::vector<TrainUtterance>& data,
                                             int64_t balance_count, const std::string& in_domain)
    : balance_count_(balance_count) {
  if (balance_count < 1) throw ConfigError("sampler: balance_count must be >= 1");
  std::map<std::string, std::map<int64_t, std::vector<int64_t>>> grouped;
  for (size_t i = 0; i < data.size(); ++i)
    grouped[data[i].domain][data[i].speaker].push_back(static_cast<int64_t>(i));
  if (grouped.empty()) throw ConfigError("sampler: no training data");
  for (auto& [name, speakers] : grouped) {
    Domain d;
    d.name = name;
    d.in_domain = name == in_domain;
    for (auto& [spk, utts] : speakers) d.speakers.emplace_back(spk, utts);
    if (d.speakers.empty()) throw ConfigError("sampler: empty domain " + name);
    if (!d.in_domain && static_cast<int64_t>(d.speakers.size()) < balance_count)
      throw ConfigError("sampler: domain " + name + " has " + std::to_string(d.speakers.size()) +
                        " speakers, fewer than balance_count " + std::to_string(balance_count));
    domains_.push_back(std::move(d));
  }
}

int64_t DomainBalancedSampler::pool_size() const {
  int64_t n = 0;
  for (const auto& d : domains_)
    n += d.in_domain ? static_cast<int64_t>(d.speakers.size()) : balance_count_;
  return n;
}

std::vector<int64_t> DomainBalancedSampler::make_pool(Rng& rng) {
  std::vector<int64_t> pool;
  for (const auto& d : domains_) {
    std::vector<int64_t> chosen;
    if (d.in_domain) {
      chosen.resize(d.speakers.size());
      for (size_t i = 0; i < d.speakers.size(); ++i) chosen[i] = static_cast<int64_t>(i);
    } else {
      chosen = rng.sample_indices(static_cast<int64_t>(d.speakers.size()), balance_count_);
    }
    for (int64_t idx : chosen) {
      const auto& utts = d.speakers[static_cast<size_t>(idx)].second;
      pool.push_back(utts[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(utts.size()) - 1))]);
    }
  }
  rng.shuffle(pool);
  return pool;
}

std::vector<int64_t> DomainBalancedSampler::next_batch(int64_t batch_size, Rng& rng) {
  std::vector<int64_t> batch;
  while (static_cast<int64_t>(batch.size()) < batch_size) {
    if (pool_pos_ >= pool_.size()) {
      pool_ = make_pool(rng);
      pool_pos_ = 0;
    }
    batch.push_back(pool_[pool_pos_++]);
  }
  return batch;
}

std::vector<int64_t> ShuffleSampler::next_batch(int64_t batch_size, Rng& rng) {
  std::vector<int64_t> batch;
  while (static_cast<int64_t>(batch.size()) < batch_size) {
    if (pos_ >= order_.size()) {
      order_.resize(static_cast<size_t>(count_));
      for (int64_t i = 0; i < count_; ++i) order_[static_cast<size_t>(i)] = i;
      rng.shuffle(order_);
      pos_ = 0;
    }
    batch.push_back(order_[pos_++]);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Loop
// ---------------------------------------------------------------------------

TrainResult train_loop(Network& net, AamHead& head, const std::vector<TrainUtterance>& data,
                       const TrainOptions& options,
                       const std::function<void(int64_t)>& checkpoint_hook) {
  if (data.empty()) throw ConfigError("train_loop: no training data");

  AdamOptimizer adam;
  adam.add_params(net.params(), options.decay.other_decay);
  NamedParams head_params;
  head.collect("head", head_params);
  adam.add_params(head_params, options.decay.aam_decay);

  Rng rng(options.seed);
  std::unique_ptr<DomainBalancedSampler> balanced;
  ShuffleSampler plain(static_cast<int64_t>(data.size()));
  if (options.domain_balanced)
    balanced = std::make_unique<DomainBalancedSampler>(data, options.balance_count, options.in_domain);

  TrainResult result;
  std::vector<double> acc_window;
  const int64_t half_cycle = options.schedule.cycle_len / 2;

  for (int64_t iter = 0; iter < options.iterations; ++iter) {
    const std::vector<int64_t> batch = balanced ? balanced->next_batch(options.batch_size, rng)
                                                : plain.next_batch(options.batch_size, rng);
    const double lr = lr_at(options.schedule, iter);

    Tensor total;
    int64_t correct = 0;
    for (int64_t idx : batch) {
      const TrainUtterance& utt = data[static_cast<size_t>(idx)];
      FeatureMatrix f = random_crop(utt.features, options.crop_s, rng);
      f = spec_augment(f, options.specaug_f, options.specaug_t, rng);
      f = mean_normalize(f);
      const Tensor emb = l2_normalize(net.embed(f.tensor(), /*training=*/true));
      if (head.predict(emb) == utt.speaker) ++correct;
      const Tensor li = head.loss(emb, utt.speaker);
      total = total.defined() ? add(total, li) : li;
    }
    const Tensor loss = scale(total, 1.0 / static_cast<double>(batch.size()));
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value))
      throw NumericError("training diverged: non-finite loss at iteration " + std::to_string(iter));

    backward(loss);
    adam.step(lr);
    adam.zero_grad();

    const double acc = static_cast<double>(correct) / static_cast<double>(batch.size());
    result.log.push_back({iter, loss_value, lr, acc});
    result.iterations_run = iter + 1;

    if (checkpoint_hook && half_cycle > 0 && (iter + 1) % half_cycle == 0) checkpoint_hook(iter + 1);

    if (options.stop_accuracy > 0.0) {
      acc_window.push_back(acc);
      if (static_cast<int64_t>(acc_window.size()) > options.stop_window)
        acc_window.erase(acc_window.begin());
      if (static_cast<int64_t>(acc_window.size()) == options.stop_window) {
        double mean = 0.0;
        for (double a : acc_window) mean += a;
        mean /= static_cast<double>(acc_window.size());
        if (mean >= options.stop_accuracy) break;
      }
    }
  }
  return result;
}

}  // namespace svkit

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

#include "svkit/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace svkit {

AamHead::AamHead(int64_t speakers, int64_t subcenters, int64_t emb_dim, double margin,
                 double scale, Rng& rng)
    : speakers_(speakers), subcenters_(subcenters), margin_(margin), scale_(scale) {
  if (speakers < 1) throw std::invalid_argument("aam_head: speakers must be >= 1");
  if (subcenters < 1) throw std::invalid_argument("aam_head: sub-centers must be >= 1");
  if (margin < 0.0 || margin >= M_PI / 2.0)
    throw std::invalid_argument("aam_head: margin must lie in [0, pi/2)");
  std::vector<double> v(static_cast<size_t>(speakers * subcenters * emb_dim));
  for (auto& x : v) x = rng.normal();
  prototypes_ = Tensor::param({speakers * subcenters, emb_dim}, std::move(v));
}

void AamHead::set_margin(double m) {
  if (m < 0.0 || m >= M_PI / 2.0) throw std::invalid_argument("aam_head: margin must lie in [0, pi/2)");
  margin_ = m;
}

Tensor AamHead::speaker_cosines(const Tensor& emb) const {
  const Tensor protos = l2_normalize_rows(prototypes_);
  const Tensor cos_all = linear(emb, protos, Tensor());          // (S*K)
  if (subcenters_ == 1) return cos_all;
  return rowwise_max(reshape(cos_all, {speakers_, subcenters_}));  // max over sub-centers
}

Tensor AamHead::logits(const Tensor& emb, int64_t target) const {
  if (target < 0 || target >= speakers_) throw std::invalid_argument("aam_head: target out of range");
  return aam_margin(speaker_cosines(emb), target, margin_, scale_);
}

Tensor AamHead::loss(const Tensor& emb, int64_t target) const {
  return cross_entropy(logits(emb, target), target);
}

int64_t AamHead::predict(const Tensor& emb) const {
  const Tensor cos = speaker_cosines(emb);
  int64_t best = 0;
  for (int64_t s = 1; s < speakers_; ++s)
    if (cos.values()[static_cast<size_t>(s)] > cos.values()[static_cast<size_t>(best)]) best = s;
  return best;
}

void AamHead::collect(const std::string& prefix, NamedParams& params) {
  params.emplace_back(prefix + ".prototypes", prototypes_);
}

}  // namespace svkit

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

#ifndef SVKIT_LOSS_HPP_
#define SVKIT_LOSS_HPP_

#include "svkit/blocks.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

// Additive-angular-margin classification head with K prototype rows per
// speaker; the per-speaker cosine is the max over its sub-centers and only
// the selected sub-center receives gradient.
class AamHead {
 public:
  AamHead(int64_t speakers, int64_t subcenters, int64_t emb_dim, double margin,
          double scale, Rng& rng);

  // Margin-free scaled-free cosine per speaker, (S). emb must be normalized.
  Tensor speaker_cosines(const Tensor& emb) const;

  // Margin-and-scale logits, (S): target entry s*cos(theta+m), rest s*cos.
  Tensor logits(const Tensor& emb, int64_t target) const;

  // Softmax cross-entropy over the margin logits.
  Tensor loss(const Tensor& emb, int64_t target) const;

  int64_t predict(const Tensor& emb) const;  // argmax speaker cosine

  void set_margin(double m);
  double margin() const { return margin_; }
  double scale() const { return scale_; }
  int64_t speakers() const { return speakers_; }
  int64_t subcenters() const { return subcenters_; }

  void collect(const std::string& prefix, NamedParams& params);
  const Tensor& prototypes() const { return prototypes_; }

 private:
  int64_t speakers_, subcenters_;
  double margin_, scale_;
  Tensor prototypes_;  // (S*K, D)
};

}  // namespace svkit

#endif  // SVKIT_LOSS_HPP_

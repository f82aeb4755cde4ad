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

#ifndef SVKIT_SCORING_HPP_
#define SVKIT_SCORING_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svkit/rng.hpp"

namespace svkit {

struct SpeakerEmbedding {
  std::vector<double> v;
  bool normalized = false;
};

SpeakerEmbedding normalize_embedding(const SpeakerEmbedding& e);

// Mean of the L2-normalized inputs, re-normalized for cosine scoring.
SpeakerEmbedding enroll_model(const std::vector<SpeakerEmbedding>& embs);

double cosine_score(const SpeakerEmbedding& e, const SpeakerEmbedding& t);

// Mean and std of one side's top-K imposter cosine scores.
struct CohortStats {
  double mu = 0.0;
  double sigma = 1.0;
};

CohortStats cohort_stats(const SpeakerEmbedding& side,
                         const std::vector<SpeakerEmbedding>& cohort, int64_t top_k);

// Adaptive s-norm: 0.5*((raw-mu_e)/sigma_e + (raw-mu_t)/sigma_t).
double snorm(double raw, const CohortStats& e_stats, const CohortStats& t_stats);

// log(max(d_t - d_min, 0.05)); the clamp guards d_t <= d_min.
double qm_duration(double d_t, double d_min = 1.0);

// log(min(n_e, 3)).
double qm_enroll_count(int64_t n_e);

// Two-class Gaussian classifier with shared covariance; emits the language
// log-likelihood-ratio log N(x;mu_f,S) - log N(x;mu_e,S), linear in x.
class GaussianBackend {
 public:
  static GaussianBackend train(const std::vector<std::vector<double>>& farsi,
                               const std::vector<std::vector<double>>& english,
                               double lambda = 1e-6);
  double llr(const std::vector<double>& x) const;

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

enum class TrialLabel { kTarget, kNontarget, kUnknown };

struct Trial {
  std::string enroll_id;
  std::string test_id;
  TrialLabel label = TrialLabel::kUnknown;
  int64_t n_e = 1;       // enrollment utterance count
  double d_t = 0.0;      // test duration, seconds
  std::optional<double> lang_llr;
};

struct UttRecord {
  std::string id;
  std::string speaker;
  double duration_s = 0.0;
  std::string language;
  std::string gender;
  std::string domain;
};

struct TrialSet {
  std::vector<Trial> trials;
  // enrollment model id -> member utterance ids
  std::map<std::string, std::vector<std::string>> enroll_models;
};

// Synthesizes per-speaker verification trials with balanced target/nontarget
// and primary-only/cross-lingual quotas; enrollment draws 1..10 primary-
// language utterances per trial. When cross_gender is set, nontarget trials
// pair speakers of opposite gender.
TrialSet make_calibration_trials(const std::vector<UttRecord>& utts, int64_t per_speaker,
                                 Rng& rng, bool cross_gender = true,
                                 const std::string& primary_language = "farsi");

// Trial list file: "enroll_id test_id [target|nontarget]" per line.
std::vector<Trial> read_trial_list(const std::string& path);
void write_trial_list(const std::string& path, const std::vector<Trial>& trials);

// Enrollment map file: "model_id utt_id [utt_id ...]" per line.
std::map<std::string, std::vector<std::string>> read_enroll_map(const std::string& path);
void write_enroll_map(const std::string& path,
                      const std::map<std::string, std::vector<std::string>>& models);

// Score file: "enroll_id test_id score" per line.
struct ScoreRecord {
  std::string enroll_id;
  std::string test_id;
  double score;
};
std::vector<ScoreRecord> read_score_file(const std::string& path);
void write_score_file(const std::string& path, const std::vector<ScoreRecord>& scores);

}  // namespace svkit

#endif  // SVKIT_SCORING_HPP_

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

#include "svkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "svkit/error.hpp"

namespace svkit {

namespace {

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SpeakerEmbedding normalize_embedding(const SpeakerEmbedding& e) {
  const double n = vec_norm(e.v);
  if (n <= 0.0) throw std::invalid_argument("normalize_embedding: zero vector");
  SpeakerEmbedding out;
  out.v.resize(e.v.size());
  for (size_t i = 0; i < e.v.size(); ++i) out.v[i] = e.v[i] / n;
  out.normalized = true;
  return out;
}

SpeakerEmbedding enroll_model(const std::vector<SpeakerEmbedding>& embs) {
  if (embs.empty()) throw std::invalid_argument("enroll_model: empty embedding list");
  const size_t d = embs[0].v.size();
  SpeakerEmbedding mean;
  mean.v.assign(d, 0.0);
  for (const auto& e : embs) {
    if (e.v.size() != d) throw std::invalid_argument("enroll_model: dimension mismatch");
    const SpeakerEmbedding n = e.normalized ? e : normalize_embedding(e);
    for (size_t i = 0; i < d; ++i) mean.v[i] += n.v[i];
  }
  for (auto& x : mean.v) x /= static_cast<double>(embs.size());
  if (vec_norm(mean.v) < 1e-12) throw std::invalid_argument("enroll_model: degenerate enrollment");
  return normalize_embedding(mean);
}

double cosine_score(const SpeakerEmbedding& e, const SpeakerEmbedding& t) {
  if (e.v.size() != t.v.size()) throw std::invalid_argument("cosine_score: dimension mismatch");
  const double ne = vec_norm(e.v);
  const double nt = vec_norm(t.v);
  if (ne <= 0.0 || nt <= 0.0) throw std::invalid_argument("cosine_score: zero vector");
  double dot = 0.0;
  for (size_t i = 0; i < e.v.size(); ++i) dot += e.v[i] * t.v[i];
  return dot / (ne * nt);
}

CohortStats cohort_stats(const SpeakerEmbedding& side,
                         const std::vector<SpeakerEmbedding>& cohort, int64_t top_k) {
  if (cohort.empty()) throw std::invalid_argument("cohort_stats: empty cohort");
  if (top_k < 2 || top_k > static_cast<int64_t>(cohort.size()))
    throw std::invalid_argument("cohort_stats: top_k must lie in [2, cohort size]");
  std::vector<double> scores;
  scores.reserve(cohort.size());
  for (const auto& imp : cohort) scores.push_back(cosine_score(side, imp));
  std::partial_sort(scores.begin(), scores.begin() + top_k, scores.end(), std::greater<double>());
  double mu = 0.0;
  for (int64_t i = 0; i < top_k; ++i) mu += scores[static_cast<size_t>(i)];
  mu /= static_cast<double>(top_k);
  double var = 0.0;
  for (int64_t i = 0; i < top_k; ++i) {
    const double d = scores[static_cast<size_t>(i)] - mu;
    var += d * d;
  }
  var /= static_cast<double>(top_k);  // population estimator
  CohortStats stats;
  stats.mu = mu;
  stats.sigma = std::sqrt(var);
  if (!(stats.sigma > 0.0)) throw NumericError("cohort_stats: degenerate cohort (sigma <= 0)");
  return stats;
}

double snorm(double raw, const CohortStats& e_stats, const CohortStats& t_stats) {
  if (!(e_stats.sigma > 0.0) || !(t_stats.sigma > 0.0))
    throw NumericError("snorm: degenerate cohort (sigma <= 0)");
  return 0.5 * ((raw - e_stats.mu) / e_stats.sigma + (raw - t_stats.mu) / t_stats.sigma);
}

double qm_duration(double d_t, double d_min) {
  if (d_t <= 0.0) throw std::invalid_argument("qm_duration: d_t must be positive");
  return std::log(std::max(d_t - d_min, 0.05));
}

double qm_enroll_count(int64_t n_e) {
  if (n_e < 1) throw std::invalid_argument("qm_enroll_count: n_e must be >= 1");
  return std::log(static_cast<double>(std::min<int64_t>(n_e, 3)));
}

// ---------------------------------------------------------------------------
// Gaussian backend
// ---------------------------------------------------------------------------

namespace {

// Cholesky solve of A x = b, A symmetric positive definite (in place copy).
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, size_t n) {
  // factorize A = L L^T
  for (size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (diag <= 0.0) throw NumericError("gaussian backend: covariance not positive definite");
    const double ljj = std::sqrt(diag);
    a[j * n + j] = ljj;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  // forward then backward substitution
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return b;
}

}  // namespace

GaussianBackend GaussianBackend::train(const std::vector<std::vector<double>>& farsi,
                                       const std::vector<std::vector<double>>& english,
                                       double lambda) {
  if (farsi.size() < 2 || english.size() < 2)
    throw std::invalid_argument("gaussian backend: need >= 2 samples per class");
  const size_t d = farsi[0].size();
  auto mean_of = [d](const std::vector<std::vector<double>>& xs) {
    std::vector<double> mu(d, 0.0);
    for (const auto& x : xs) {
      if (x.size() != d) throw std::invalid_argument("gaussian backend: dimension mismatch");
      for (size_t i = 0; i < d; ++i) mu[i] += x[i];
    }
    for (auto& v : mu) v /= static_cast<double>(xs.size());
    return mu;
  };
  const std::vector<double> mu_f = mean_of(farsi);
  const std::vector<double> mu_e = mean_of(english);

  // pooled maximum-likelihood within-class covariance, ridge lambda*I
  std::vector<double> cov(d * d, 0.0);
  const double n_total = static_cast<double>(farsi.size() + english.size());
  auto accumulate = [&](const std::vector<std::vector<double>>& xs, const std::vector<double>& mu) {
    std::vector<double> c(d);
    for (const auto& x : xs) {
      for (size_t i = 0; i < d; ++i) c[i] = x[i] - mu[i];
      for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j <= i; ++j) cov[i * d + j] += c[i] * c[j];
    }
  };
  accumulate(farsi, mu_f);
  accumulate(english, mu_e);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      cov[i * d + j] /= n_total;
      cov[j * d + i] = cov[i * d + j];
    }
    cov[i * d + i] += lambda;
  }

  std::vector<double> diff(d);
  for (size_t i = 0; i < d; ++i) diff[i] = mu_f[i] - mu_e[i];

  GaussianBackend gb;
  gb.w_ = cholesky_solve(cov, diff, d);  // S^{-1} (mu_f - mu_e)
  // -(1/2)(mu_f' S^-1 mu_f - mu_e' S^-1 mu_e) = -(1/2) w' (mu_f + mu_e)
  double b = 0.0;
  for (size_t i = 0; i < d; ++i) b += gb.w_[i] * (mu_f[i] + mu_e[i]);
  gb.b_ = -0.5 * b;
  return gb;
}

double GaussianBackend::llr(const std::vector<double>& x) const {
  if (x.size() != w_.size()) throw std::invalid_argument("gaussian backend: dimension mismatch");
  double s = b_;
  for (size_t i = 0; i < x.size(); ++i) s += w_[i] * x[i];
  return s;
}

// ---------------------------------------------------------------------------
// Trial synthesis
// ---------------------------------------------------------------------------

TrialSet make_calibration_trials(const std::vector<UttRecord>& utts, int64_t per_speaker,
                                 Rng& rng, bool cross_gender,
                                 const std::string& primary_language) {
  if (per_speaker < 4 || per_speaker % 4 != 0)
    throw std::invalid_argument("make_calibration_trials: per_speaker must be a positive multiple of 4");

  struct SpeakerInfo {
    std::string gender;
    std::vector<const UttRecord*> primary, other;
  };
  std::map<std::string, SpeakerInfo> speakers;
  for (const auto& u : utts) {
    if (u.speaker.empty() || u.gender.empty() || u.language.empty())
      throw std::invalid_argument("make_calibration_trials: utterance " + u.id +
                                  " lacks speaker/gender/language metadata");
    auto& info = speakers[u.speaker];
    info.gender = u.gender;
    (u.language == primary_language ? info.primary : info.other).push_back(&u);
  }
  if (speakers.size() < 2) throw std::invalid_argument("make_calibration_trials: need >= 2 speakers");

  std::vector<std::string> speaker_ids;
  for (const auto& [id, info] : speakers) speaker_ids.push_back(id);

  auto pick = [&rng](const std::vector<const UttRecord*>& xs) {
    return xs[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(xs.size()) - 1))];
  };

  TrialSet out;
  const int64_t quarter = per_speaker / 4;
  int64_t model_seq = 0;
  for (const auto& spk : speaker_ids) {
    const SpeakerInfo& info = speakers.at(spk);
    if (info.primary.empty())
      throw std::invalid_argument("make_calibration_trials: speaker " + spk +
                                  " has no " + primary_language + " utterances for enrollment");

    // imposter pools, optionally restricted to the opposite gender
    std::vector<std::string> imposters;
    for (const auto& other : speaker_ids) {
      if (other == spk) continue;
      if (cross_gender && speakers.at(other).gender == info.gender) continue;
      imposters.push_back(other);
    }
    if (imposters.empty())
      throw std::invalid_argument("make_calibration_trials: no " +
                                  std::string(cross_gender ? "opposite-gender " : "") +
                                  "imposters for speaker " + spk);

    for (int64_t q = 0; q < 4; ++q) {
      const bool target = q < 2;
      const bool cross_lingual = (q % 2) == 1;
      for (int64_t i = 0; i < quarter; ++i) {
        // fresh enrollment per trial: 1..10 primary-language utterances
        const int64_t avail = static_cast<int64_t>(info.primary.size());
        const int64_t max_ne = std::min<int64_t>(10, target && !cross_lingual ? avail - 1 : avail);
        if (max_ne < 1)
          throw std::invalid_argument("make_calibration_trials: speaker " + spk +
                                      " has too few " + primary_language + " utterances");
        const int64_t n_e = rng.uniform_int(1, max_ne);
        std::vector<int64_t> order = rng.sample_indices(avail, n_e);
        std::set<std::string> enrolled;
        const std::string model_id = "cal" + std::to_string(model_seq++);
        auto& members = out.enroll_models[model_id];
        for (int64_t idx : order) {
          members.push_back(info.primary[static_cast<size_t>(idx)]->id);
          enrolled.insert(members.back());
        }

        const UttRecord* test = nullptr;
        if (target && !cross_lingual) {
          std::vector<const UttRecord*> pool;
          for (const auto* u : info.primary)
            if (!enrolled.count(u->id)) pool.push_back(u);
          if (pool.empty())
            throw std::invalid_argument("make_calibration_trials: speaker " + spk +
                                        " has no held-out " + primary_language + " test utterance");
          test = pick(pool);
        } else if (target && cross_lingual) {
          if (info.other.empty())
            throw std::invalid_argument(
                "make_calibration_trials: cross-lingual quota unsatisfiable; speaker " + spk +
                " has only " + primary_language + " utterances");
          test = pick(info.other);
        } else {
          const std::string imp =
              imposters[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(imposters.size()) - 1))];
          const SpeakerInfo& imp_info = speakers.at(imp);
          const auto& pool = cross_lingual ? imp_info.other : imp_info.primary;
          if (pool.empty())
            throw std::invalid_argument(
                "make_calibration_trials: " +
                std::string(cross_lingual ? "cross-lingual quota unsatisfiable; imposter "
                                          : "no primary-language utterances for imposter ") +
                imp);
          test = pick(pool);
        }

        Trial trial;
        trial.enroll_id = model_id;
        trial.test_id = test->id;
        trial.label = target ? TrialLabel::kTarget : TrialLabel::kNontarget;
        trial.n_e = n_e;
        trial.d_t = test->duration_s;
        out.trials.push_back(std::move(trial));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

std::vector<Trial> read_trial_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open trial list: " + path);
  std::vector<Trial> trials;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Trial t;
    std::string label;
    ls >> t.enroll_id >> t.test_id >> label;
    if (t.enroll_id.empty() || t.test_id.empty())
      throw DataError("malformed trial line: " + line);
    if (label == "target") {
      t.label = TrialLabel::kTarget;
    } else if (label == "nontarget") {
      t.label = TrialLabel::kNontarget;
    } else if (!label.empty()) {
      throw DataError("unknown trial label '" + label + "' in " + path);
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void write_trial_list(const std::string& path, const std::vector<Trial>& trials) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write trial list: " + path);
  for (const auto& t : trials) {
    os << t.enroll_id << " " << t.test_id;
    if (t.label == TrialLabel::kTarget) os << " target";
    if (t.label == TrialLabel::kNontarget) os << " nontarget";
    os << "\n";
  }
}

std::map<std::string, std::vector<std::string>> read_enroll_map(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open enroll map: " + path);
  std::map<std::string, std::vector<std::string>> models;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string model_id, utt;
    ls >> model_id;
    std::vector<std::string> members;
    while (ls >> utt) members.push_back(utt);
    if (model_id.empty() || members.empty()) throw DataError("malformed enroll map line: " + line);
    models[model_id] = std::move(members);
  }
  return models;
}

void write_enroll_map(const std::string& path,
                      const std::map<std::string, std::vector<std::string>>& models) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write enroll map: " + path);
  for (const auto& [model_id, members] : models) {
    os << model_id;
    for (const auto& m : members) os << " " << m;
    os << "\n";
  }
}

std::vector<ScoreRecord> read_score_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open score file: " + path);
  std::vector<ScoreRecord> scores;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ScoreRecord r;
    if (!(ls >> r.enroll_id >> r.test_id >> r.score))
      throw DataError("malformed score line: " + line);
    scores.push_back(std::move(r));
  }
  return scores;
}

void write_score_file(const std::string& path, const std::vector<ScoreRecord>& scores) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write score file: " + path);
  char buf[64];
  for (const auto& r : scores) {
    std::snprintf(buf, sizeof(buf), "%.12f", r.score);
    os << r.enroll_id << " " << r.test_id << " " << buf << "\n";
  }
}

}  // namespace svkit

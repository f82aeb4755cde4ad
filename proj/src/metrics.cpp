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

#include "svkit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace svkit {

namespace {

struct RocPoint {
  double fa;
  double fr;
};

// Operating points as the accept threshold sweeps upward: begins at
// (fa=1, fr=0), ends at (fa=0, fr=1). Decisions accept score >= threshold.
std::vector<RocPoint> roc_points(std::vector<ScoredTrial> trials, int64_t& n_tar, int64_t& n_non) {
  n_tar = n_non = 0;
  for (const auto& t : trials) (t.target ? n_tar : n_non)++;
  if (n_tar == 0 || n_non == 0)
    throw std::invalid_argument("metrics: both target and nontarget trials required");
  std::sort(trials.begin(), trials.end(),
            [](const ScoredTrial& a, const ScoredTrial& b) { return a.score < b.score; });

  std::vector<RocPoint> points;
  points.push_back({1.0, 0.0});
  int64_t missed = 0, rejected_non = 0;
  size_t i = 0;
  while (i < trials.size()) {
    // advance past every trial sharing this score; threshold just above it
    const double s = trials[i].score;
    while (i < trials.size() && trials[i].score == s) {
      if (trials[i].target) {
        ++missed;
      } else {
        ++rejected_non;
      }
      ++i;
    }
    points.push_back({static_cast<double>(n_non - rejected_non) / n_non,
                      static_cast<double>(missed) / n_tar});
  }
  return points;
}

}  // namespace

double eer(const std::vector<ScoredTrial>& trials) {
  int64_t n_tar = 0, n_non = 0;
  const std::vector<RocPoint> points = roc_points(trials, n_tar, n_non);
  // fr - fa rises monotonically from -1 to +1; find the sign change
  for (size_t k = 0; k < points.size(); ++k) {
    const double gap = points[k].fr - points[k].fa;
    if (gap == 0.0) return points[k].fa;
    if (gap > 0.0) {
      const RocPoint& lo = points[k - 1];  // k >= 1: first point has gap -1
      const RocPoint& hi = points[k];
      const double denom = (hi.fr - lo.fr) - (hi.fa - lo.fa);
      if (denom == 0.0) return lo.fa;
      const double lam = (lo.fa - lo.fr) / denom;
      return lo.fa + lam * (hi.fa - lo.fa);
    }
  }
  return 1.0;  // unreachable: final point is (0,1)
}

double min_dcf(const std::vector<ScoredTrial>& trials, double p_target, double c_miss,
               double c_fa) {
  if (c_miss <= 0.0 || c_fa <= 0.0) throw std::invalid_argument("min_dcf: costs must be positive");
  if (p_target <= 0.0 || p_target >= 1.0)
    throw std::invalid_argument("min_dcf: p_target must lie in (0,1)");
  int64_t n_tar = 0, n_non = 0;
  const std::vector<RocPoint> points = roc_points(trials, n_tar, n_non);
  const double norm = std::min(c_miss * p_target, c_fa * (1.0 - p_target));
  double best = 1e300;
  for (const auto& p : points) {
    const double dcf = (c_miss * p_target * p.fr + c_fa * (1.0 - p_target) * p.fa) / norm;
    best = std::min(best, dcf);
  }
  return best;
}

EvalReport evaluate(const std::vector<ScoredTrial>& trials, double p_target, double c_miss,
                    double c_fa) {
  EvalReport r;
  r.p_target = p_target;
  r.c_miss = c_miss;
  r.c_fa = c_fa;
  r.n_trials = static_cast<int64_t>(trials.size());
  for (const auto& t : trials) (t.target ? r.n_targets : r.n_nontargets)++;
  r.eer_pct = eer(trials) * 100.0;
  r.mindcf = min_dcf(trials, p_target, c_miss, c_fa);
  r.mindcf2 = min_dcf(trials, p_target, 1.0, c_fa);
  return r;
}

std::string format_report(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "# eval p_target=%.6f c_miss=%.6f c_fa=%.6f\n"
                "trials %lld targets %lld nontargets %lld\n"
                "EER(%%) %.4f\n"
                "MinDCF %.4f\n"
                "MinDCF2 %.4f\n",
                r.p_target, r.c_miss, r.c_fa, static_cast<long long>(r.n_trials),
                static_cast<long long>(r.n_targets), static_cast<long long>(r.n_nontargets),
                r.eer_pct, r.mindcf, r.mindcf2);
  return buf;
}

}  // namespace svkit

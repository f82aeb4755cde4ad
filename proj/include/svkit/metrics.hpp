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

#ifndef SVKIT_METRICS_HPP_
#define SVKIT_METRICS_HPP_

#include <string>
#include <vector>

namespace svkit {

struct ScoredTrial {
  double score;
  bool target;
};

// Rate at which false-accept equals false-reject; linear interpolation
// between the two ROC operating points bracketing the crossing.
double eer(const std::vector<ScoredTrial>& trials);

// min over thresholds of c_miss*p_target*P_miss + c_fa*(1-p_target)*P_fa,
// normalized by min(c_miss*p_target, c_fa*(1-p_target)). Thresholds sweep
// all midpoints between adjacent distinct scores plus both infinities.
double min_dcf(const std::vector<ScoredTrial>& trials, double p_target, double c_miss,
               double c_fa);

struct EvalReport {
  double p_target = 0.01;
  double c_miss = 10.0;
  double c_fa = 1.0;
  int64_t n_trials = 0;
  int64_t n_targets = 0;
  int64_t n_nontargets = 0;
  double eer_pct = 0.0;
  double mindcf = 0.0;
  double mindcf2 = 0.0;  // c_miss = 1
};

EvalReport evaluate(const std::vector<ScoredTrial>& trials, double p_target = 0.01,
                    double c_miss = 10.0, double c_fa = 1.0);
std::string format_report(const EvalReport& r);

}  // namespace svkit

#endif  // SVKIT_METRICS_HPP_

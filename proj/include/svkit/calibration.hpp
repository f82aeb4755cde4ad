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

#ifndef SVKIT_CALIBRATION_HPP_
#define SVKIT_CALIBRATION_HPP_

#include <string>
#include <vector>

namespace svkit {

// llr(x) = bias + w_score * score + sum_q w_qm[q] * qm[q]
struct CalibrationModel {
  double bias = 0.0;
  double w_score = 1.0;
  std::vector<std::string> qm_names;
  std::vector<double> w_qm;
  double prior = 0.01;
};

struct CalibrationTrial {
  double score;
  std::vector<double> qms;
  bool target;
};

// Prior-weighted logistic regression, full-batch gradient descent with
// backtracking to gradient norm < 1e-8; deterministic. A ridge of 1e-6 on
// the non-bias weights breaks ties from constant columns.
CalibrationModel calibrate_train(const std::vector<CalibrationTrial>& trials, double prior,
                                 const std::vector<std::string>& qm_names = {});

double calibrate_apply(const CalibrationModel& model, double raw,
                       const std::vector<double>& qms);

// The objective value at the model's weights (reload verification).
double calibration_objective(const CalibrationModel& model,
                             const std::vector<CalibrationTrial>& trials);

void save_calibration(const std::string& path, const CalibrationModel& model);
CalibrationModel load_calibration(const std::string& path);

// Per-trial weighted mean of aligned score sets; weights must sum to 1.
std::vector<double> fuse(const std::vector<std::vector<double>>& score_sets,
                         const std::vector<double>& weights);

}  // namespace svkit

#endif  // SVKIT_CALIBRATION_HPP_

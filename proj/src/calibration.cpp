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

#include "svkit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "svkit/error.hpp"

namespace svkit {

namespace {

constexpr double kRidge = 1e-6;  // on non-bias weights

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Centered design matrix: column 0 is the score, then the QMs. The bias is
// optimized in the centered parameterization and shifted back afterwards,
// which keeps the descent well conditioned.
struct Problem {
  std::vector<std::vector<double>> x;  // n rows, d columns (centered)
  std::vector<bool> target;
  std::vector<double> col_means;
  double w_tar, w_non;  // per-trial weights
  double offset;        // logit(prior)

  double objective(const std::vector<double>& w, double bias) const {
    double loss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double llr = bias;
      for (size_t j = 0; j < w.size(); ++j) llr += w[j] * x[i][j];
      const double a = llr + offset;
      loss += target[i] ? w_tar * softplus(-a) : w_non * softplus(a);
    }
    for (double wi : w) loss += 0.5 * kRidge * wi * wi;
    return loss;
  }

  void gradient(const std::vector<double>& w, double bias, std::vector<double>& gw,
                double& gb) const {
    gw.assign(w.size(), 0.0);
    gb = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double llr = bias;
      for (size_t j = 0; j < w.size(); ++j) llr += w[j] * x[i][j];
      const double a = llr + offset;
      // d softplus(-a)/da = -sigmoid(-a); d softplus(a)/da = sigmoid(a)
      const double da = target[i] ? -w_tar * sigmoid(-a) : w_non * sigmoid(a);
      gb += da;
      for (size_t j = 0; j < w.size(); ++j) gw[j] += da * x[i][j];
    }
    for (size_t j = 0; j < w.size(); ++j) gw[j] += kRidge * w[j];
  }
};

}  // namespace

CalibrationModel calibrate_train(const std::vector<CalibrationTrial>& trials, double prior,
                                 const std::vector<std::string>& qm_names) {
  if (trials.empty()) throw std::invalid_argument("calibrate_train: no trials");
  if (prior <= 0.0 || prior >= 1.0)
    throw std::invalid_argument("calibrate_train: prior must lie in (0,1)");
  const size_t n_qm = trials[0].qms.size();
  if (!qm_names.empty() && qm_names.size() != n_qm)
    throw std::invalid_argument("calibrate_train: qm name count mismatch");

  int64_t n_tar = 0, n_non = 0;
  for (const auto& t : trials) {
    if (t.qms.size() != n_qm) throw std::invalid_argument("calibrate_train: ragged QM vectors");
    (t.target ? n_tar : n_non)++;
  }
  if (n_tar == 0 || n_non == 0)
    throw std::invalid_argument("calibrate_train: both classes required");

  Problem prob;
  const size_t d = 1 + n_qm;
  prob.col_means.assign(d, 0.0);
  for (const auto& t : trials) {
    prob.col_means[0] += t.score;
    for (size_t q = 0; q < n_qm; ++q) prob.col_means[1 + q] += t.qms[q];
  }
  for (auto& m : prob.col_means) m /= static_cast<double>(trials.size());
  prob.x.reserve(trials.size());
  prob.target.reserve(trials.size());
  for (const auto& t : trials) {
    std::vector<double> row(d);
    row[0] = t.score - prob.col_means[0];
    for (size_t q = 0; q < n_qm; ++q) row[1 + q] = t.qms[q] - prob.col_means[1 + q];
    prob.x.push_back(std::move(row));
    prob.target.push_back(t.target);
  }
  prob.w_tar = prior / static_cast<double>(n_tar);
  prob.w_non = (1.0 - prior) / static_cast<double>(n_non);
  prob.offset = std::log(prior / (1.0 - prior));

  std::vector<double> w(d, 0.0);
  double bias = 0.0;
  double step = 1.0;
  std::vector<double> gw(d);
  double gb = 0.0;
  double fx = prob.objective(w, bias);

  const int64_t max_iters = 200000;
  for (int64_t it = 0; it < max_iters; ++it) {
    prob.gradient(w, bias, gw, gb);
    double gnorm = gb * gb;
    for (double g : gw) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-8) break;

    // backtracking line search on the steepest-descent direction
    bool moved = false;
    for (int back = 0; back < 60; ++back) {
      std::vector<double> w2(d);
      for (size_t j = 0; j < d; ++j) w2[j] = w[j] - step * gw[j];
      const double bias2 = bias - step * gb;
      const double fx2 = prob.objective(w2, bias2);
      if (fx2 <= fx - 0.5 * step * gnorm * gnorm * 1e-4) {
        w = std::move(w2);
        bias = bias2;
        fx = fx2;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // step underflow; gradient numerically flat
  }

  CalibrationModel model;
  model.prior = prior;
  model.w_score = w[0];
  model.w_qm.assign(w.begin() + 1, w.end());
  model.qm_names = qm_names.empty() ? std::vector<std::string>(n_qm, "") : qm_names;
  for (size_t q = 0; q < model.qm_names.size(); ++q)
    if (model.qm_names[q].empty()) model.qm_names[q] = "qm" + std::to_string(q);
  // undo the centering: bias' = bias - sum_j w_j * mean_j
  model.bias = bias;
  model.bias -= w[0] * prob.col_means[0];
  for (size_t q = 0; q < n_qm; ++q) model.bias -= w[1 + q] * prob.col_means[1 + q];
  return model;
}

double calibrate_apply(const CalibrationModel& model, double raw,
                       const std::vector<double>& qms) {
  if (qms.size() != model.w_qm.size())
    throw std::invalid_argument("calibrate_apply: QM count does not match model");
  double llr = model.bias + model.w_score * raw;
  for (size_t q = 0; q < qms.size(); ++q) llr += model.w_qm[q] * qms[q];
  return llr;
}

double calibration_objective(const CalibrationModel& model,
                             const std::vector<CalibrationTrial>& trials) {
  int64_t n_tar = 0, n_non = 0;
  for (const auto& t : trials) (t.target ? n_tar : n_non)++;
  if (n_tar == 0 || n_non == 0)
    throw std::invalid_argument("calibration_objective: both classes required");
  const double w_tar = model.prior / static_cast<double>(n_tar);
  const double w_non = (1.0 - model.prior) / static_cast<double>(n_non);
  const double offset = std::log(model.prior / (1.0 - model.prior));
  double loss = 0.0;
  for (const auto& t : trials) {
    const double a = calibrate_apply(model, t.score, t.qms) + offset;
    loss += t.target ? w_tar * softplus(-a) : w_non * softplus(a);
  }
  loss += 0.5 * kRidge * model.w_score * model.w_score;
  for (double wq : model.w_qm) loss += 0.5 * kRidge * wq * wq;
  return loss;
}

void save_calibration(const std::string& path, const CalibrationModel& model) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write calibration model: " + path);
  char buf[64];
  auto put = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << key << " " << buf << "\n";
  };
  put("prior", model.prior);
  put("bias", model.bias);
  put("w_score", model.w_score);
  for (size_t q = 0; q < model.w_qm.size(); ++q) put("qm_" + model.qm_names[q], model.w_qm[q]);
  if (!os) throw DataError("calibration model write failed: " + path);
}

CalibrationModel load_calibration(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open calibration model: " + path);
  CalibrationModel model;
  model.w_qm.clear();
  model.qm_names.clear();
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    double value;
    if (!(ls >> key >> value)) throw DataError("malformed calibration line: " + line);
    if (key == "prior") {
      model.prior = value;
    } else if (key == "bias") {
      model.bias = value;
    } else if (key == "w_score") {
      model.w_score = value;
    } else if (key.rfind("qm_", 0) == 0) {
      model.qm_names.push_back(key.substr(3));
      model.w_qm.push_back(value);
    } else {
      throw DataError("unknown calibration key: " + key);
    }
  }
  return model;
}

std::vector<double> fuse(const std::vector<std::vector<double>>& score_sets,
                         const std::vector<double>& weights) {
  if (score_sets.empty()) throw std::invalid_argument("fuse: no score sets");
  if (score_sets.size() != weights.size())
    throw std::invalid_argument("fuse: weight count does not match systems");
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("fuse: weights must sum to 1");
  const size_t n = score_sets[0].size();
  for (const auto& s : score_sets)
    if (s.size() != n) throw std::invalid_argument("fuse: misaligned trial lists");
  std::vector<double> out(n, 0.0);
  for (size_t k = 0; k < score_sets.size(); ++k)
    for (size_t i = 0; i < n; ++i) out[i] += weights[k] * score_sets[k][i];
  return out;
}

}  // namespace svkit

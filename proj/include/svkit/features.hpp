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

#ifndef SVKIT_FEATURES_HPP_
#define SVKIT_FEATURES_HPP_

#include <functional>

#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"
#include "svkit/wav.hpp"

namespace svkit {

// Log mel-filterbank energies, (n_mels, frames) row-major.
struct FeatureMatrix {
  int64_t n_mels = 0;
  int64_t frames = 0;
  double hop_ms = 10.0;  // needed to convert crop seconds to frames
  std::vector<double> values;

  double& at(int64_t mel, int64_t frame) { return values[static_cast<size_t>(mel * frames + frame)]; }
  double at(int64_t mel, int64_t frame) const { return values[static_cast<size_t>(mel * frames + frame)]; }
  Tensor tensor() const { return Tensor::from({n_mels, frames}, values); }
};

struct LogMelOptions {
  int64_t n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  int64_t fft_size = 512;      // Hamming window, zero-padded frames
  double mel_low_hz = 20.0;
  double mel_high_hz = 7600.0;
  double floor = 1e-10;        // under the natural log
};

// Framing yields 1 + floor((len - win) / hop) frames; each frame is Hamming
// windowed, FFT'd, run through a triangular mel filterbank on the power
// spectrum, and floored before the log. Throws if the waveform is shorter
// than one window.
FeatureMatrix logmel(const Waveform& w, const LogMelOptions& opts);
FeatureMatrix logmel(const Waveform& w);

// Zero-mean over time per mel coefficient.
FeatureMatrix mean_normalize(const FeatureMatrix& f);

// One contiguous frequency band of width U[0, max_f_mask] and one time band
// of width U[0, max_t_mask] are zeroed; start positions uniform.
FeatureMatrix spec_augment(const FeatureMatrix& f, int64_t max_f_mask, int64_t max_t_mask, Rng& rng);

// Fixed-length crop of round(crop_s / hop) frames starting at a uniform
// offset, wrapping cyclically past the end.
FeatureMatrix random_crop(const FeatureMatrix& f, double crop_s, Rng& rng);

// Waveform-level augmentation slot (additive noise / reverb corpora are
// supplied by the caller); identity when empty.
using WaveformTransform = std::function<Waveform(const Waveform&)>;

}  // namespace svkit

#endif  // SVKIT_FEATURES_HPP_

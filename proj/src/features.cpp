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

#include "svkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace svkit {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Iterative radix-2 complex FFT, in place. fft_size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Triangular filterbank over FFT bin center frequencies, (n_mels, bins).
std::vector<double> mel_filterbank(const LogMelOptions& opts, int sample_rate) {
  const int64_t bins = opts.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(opts.mel_low_hz);
  const double mel_hi = hz_to_mel(opts.mel_high_hz);
  std::vector<double> edges(static_cast<size_t>(opts.n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (opts.n_mels + 1));

  std::vector<double> fb(static_cast<size_t>(opts.n_mels * bins), 0.0);
  for (int64_t m = 0; m < opts.n_mels; ++m) {
    const double f0 = edges[static_cast<size_t>(m)];
    const double f1 = edges[static_cast<size_t>(m) + 1];
    const double f2 = edges[static_cast<size_t>(m) + 2];
    for (int64_t k = 0; k < bins; ++k) {
      const double fk = static_cast<double>(k) * sample_rate / opts.fft_size;
      double w = 0.0;
      if (fk > f0 && fk < f1) {
        w = (fk - f0) / (f1 - f0);
      } else if (fk >= f1 && fk < f2) {
        w = (f2 - fk) / (f2 - f1);
      }
      fb[static_cast<size_t>(m * bins + k)] = w;
    }
  }
  return fb;
}

}  // namespace

FeatureMatrix logmel(const Waveform& w, const LogMelOptions& opts) {
  if (w.samples.empty() || w.sample_rate <= 0) throw std::invalid_argument("logmel: empty waveform");
  if ((opts.fft_size & (opts.fft_size - 1)) != 0 || opts.fft_size <= 0)
    throw std::invalid_argument("logmel: fft_size must be a power of two");
  const int64_t win = static_cast<int64_t>(std::lround(opts.win_ms * w.sample_rate / 1000.0));
  const int64_t hop = static_cast<int64_t>(std::lround(opts.hop_ms * w.sample_rate / 1000.0));
  if (win > opts.fft_size) throw std::invalid_argument("logmel: window longer than fft_size");
  const int64_t len = static_cast<int64_t>(w.samples.size());
  if (len < win) throw std::invalid_argument("logmel: waveform shorter than one window");
  const int64_t frames = 1 + (len - win) / hop;
  const int64_t bins = opts.fft_size / 2 + 1;

  std::vector<double> hamming(static_cast<size_t>(win));
  for (int64_t i = 0; i < win; ++i)
    hamming[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1));

  const std::vector<double> fb = mel_filterbank(opts, w.sample_rate);

  FeatureMatrix out;
  out.n_mels = opts.n_mels;
  out.frames = frames;
  out.hop_ms = opts.hop_ms;
  out.values.assign(static_cast<size_t>(opts.n_mels * frames), 0.0);

  std::vector<std::complex<double>> buf(static_cast<size_t>(opts.fft_size));
  std::vector<double> power(static_cast<size_t>(bins));
  for (int64_t fr = 0; fr < frames; ++fr) {
    const double* x = w.samples.data() + fr * hop;
    for (int64_t i = 0; i < win; ++i) buf[static_cast<size_t>(i)] = x[i] * hamming[static_cast<size_t>(i)];
    for (int64_t i = win; i < opts.fft_size; ++i) buf[static_cast<size_t>(i)] = 0.0;
    fft_radix2(buf);
    for (int64_t k = 0; k < bins; ++k) power[static_cast<size_t>(k)] = std::norm(buf[static_cast<size_t>(k)]);
    for (int64_t m = 0; m < opts.n_mels; ++m) {
      const double* fw = fb.data() + m * bins;
      double e = 0.0;
      for (int64_t k = 0; k < bins; ++k) e += fw[k] * power[static_cast<size_t>(k)];
      out.at(m, fr) = std::log(std::max(e, opts.floor));
    }
  }
  return out;
}

FeatureMatrix logmel(const Waveform& w) { return logmel(w, LogMelOptions{}); }

FeatureMatrix mean_normalize(const FeatureMatrix& f) {
  if (f.frames < 1) throw std::invalid_argument("mean_normalize: no frames");
  FeatureMatrix out = f;
  for (int64_t m = 0; m < f.n_mels; ++m) {
    double mu = 0.0;
    for (int64_t t = 0; t < f.frames; ++t) mu += f.at(m, t);
    mu /= static_cast<double>(f.frames);
    for (int64_t t = 0; t < f.frames; ++t) out.at(m, t) = f.at(m, t) - mu;
  }
  return out;
}

FeatureMatrix spec_augment(const FeatureMatrix& f, int64_t max_f_mask, int64_t max_t_mask, Rng& rng) {
  if (max_f_mask < 0 || max_f_mask > f.n_mels)
    throw std::invalid_argument("spec_augment: frequency mask bound exceeds axis extent");
  if (max_t_mask < 0 || max_t_mask > f.frames)
    throw std::invalid_argument("spec_augment: time mask bound exceeds axis extent");
  FeatureMatrix out = f;
  const int64_t wf = rng.uniform_int(0, max_f_mask);
  const int64_t f0 = wf < f.n_mels ? rng.uniform_int(0, f.n_mels - wf) : 0;
  const int64_t wt = rng.uniform_int(0, max_t_mask);
  const int64_t t0 = wt < f.frames ? rng.uniform_int(0, f.frames - wt) : 0;
  for (int64_t m = f0; m < f0 + wf; ++m)
    for (int64_t t = 0; t < f.frames; ++t) out.at(m, t) = 0.0;
  for (int64_t m = 0; m < f.n_mels; ++m)
    for (int64_t t = t0; t < t0 + wt; ++t) out.at(m, t) = 0.0;
  return out;
}

FeatureMatrix random_crop(const FeatureMatrix& f, double crop_s, Rng& rng) {
  if (crop_s <= 0.0) throw std::invalid_argument("random_crop: crop length must be positive");
  const int64_t crop = static_cast<int64_t>(std::lround(crop_s * 1000.0 / f.hop_ms));
  if (crop < 1) throw std::invalid_argument("random_crop: crop shorter than one frame");
  const int64_t start = rng.uniform_int(0, f.frames - 1);
  FeatureMatrix out;
  out.n_mels = f.n_mels;
  out.frames = crop;
  out.hop_ms = f.hop_ms;
  out.values.assign(static_cast<size_t>(f.n_mels * crop), 0.0);
  for (int64_t m = 0; m < f.n_mels; ++m)
    for (int64_t t = 0; t < crop; ++t) out.at(m, t) = f.at(m, (start + t) % f.frames);
  return out;
}

}  // namespace svkit

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "svkit/features.hpp"
#include "svkit/wav.hpp"

using namespace svkit;

namespace {

Waveform sine(double freq_hz, double seconds, int rate = 16000, double amp = 0.4) {
  Waveform w;
  w.sample_rate = rate;
  const int64_t n = static_cast<int64_t>(std::lround(seconds * rate));
  w.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] = amp * std::sin(2.0 * M_PI * freq_hz * i / rate);
  return w;
}

// Direct DFT magnitude-squared of one Hamming-windowed frame at one bin.
double dft_power_oracle(const std::vector<double>& samples, int64_t offset, int64_t win,
                        int64_t fft_size, int64_t bin) {
  double re = 0.0, im = 0.0;
  for (int64_t i = 0; i < win; ++i) {
    const double ham = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1));
    const double x = samples[static_cast<size_t>(offset + i)] * ham;
    const double ang = -2.0 * M_PI * bin * i / static_cast<double>(fft_size);
    re += x * std::cos(ang);
    im += x * std::sin(ang);
  }
  return re * re + im * im;
}

}  // namespace

TEST_CASE("logmel frame count and error cases") {
  Waveform w = sine(440.0, 2.0);
  FeatureMatrix f = logmel(w);
  CHECK(f.n_mels == 80);
  CHECK(f.frames == 198);  // 1 + (32000-400)/160

  Waveform tiny = sine(440.0, 0.020);  // shorter than one 25 ms window
  CHECK_THROWS_AS(logmel(tiny), std::invalid_argument);
}

TEST_CASE("logmel clamps silence to the floor") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  FeatureMatrix f = logmel(w);
  for (double v : f.values) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
}

TEST_CASE("pure tone concentrates energy near its frequency") {
  const double tone = 1000.0;
  Waveform w = sine(tone, 1.0);
  FeatureMatrix f = logmel(w);

  // strongest mel bin across the middle frame
  const int64_t frame = f.frames / 2;
  int64_t best = 0;
  for (int64_t m = 1; m < f.n_mels; ++m)
    if (f.at(m, frame) > f.at(best, frame)) best = m;

  // map the winning filter back to a center frequency via the mel edges
  auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto mel_to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const double lo = hz_to_mel(20.0), hi = hz_to_mel(7600.0);
  const double center = mel_to_hz(lo + (hi - lo) * static_cast<double>(best + 1) / 81.0);
  CHECK(std::abs(center - tone) < 150.0);

  // independent DFT oracle: power at the tone bin dwarfs a distant bin
  const int64_t bin_tone = static_cast<int64_t>(std::lround(tone * 512 / 16000.0));
  const int64_t bin_far = static_cast<int64_t>(std::lround(5000.0 * 512 / 16000.0));
  const double p_tone = dft_power_oracle(w.samples, frame * 160, 400, 512, bin_tone);
  const double p_far = dft_power_oracle(w.samples, frame * 160, 400, 512, bin_far);
  CHECK(p_tone > 1e6 * std::max(p_far, 1e-30));

  // and the log-mel energy at the tone's mel region beats that far region
  int64_t far_mel = 0;
  double far_gap = 1e9;
  for (int64_t m = 0; m < f.n_mels; ++m) {
    const double c = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) / 81.0);
    if (std::abs(c - 5000.0) < far_gap) {
      far_gap = std::abs(c - 5000.0);
      far_mel = m;
    }
  }
  CHECK(f.at(best, frame) > f.at(far_mel, frame) + 5.0);
}

TEST_CASE("energy ordering: scaling the waveform adds log(alpha^2)") {
  Waveform w = sine(700.0, 0.5);
  FeatureMatrix f1 = logmel(w);
  const double alpha = 3.0;
  for (auto& s : w.samples) s *= alpha;
  FeatureMatrix f2 = logmel(w);
  for (size_t i = 0; i < f1.values.size(); ++i) {
    if (f1.values[i] <= std::log(1e-10) + 1e-9) continue;  // floor active
    CHECK(f2.values[i] - f1.values[i] == doctest::Approx(std::log(alpha * alpha)).epsilon(1e-9));
  }
}

TEST_CASE("mean_normalize zeroes row means and is idempotent") {
  Waveform w = sine(300.0, 1.0);
  FeatureMatrix f = mean_normalize(logmel(w));
  for (int64_t m = 0; m < f.n_mels; ++m) {
    double mu = 0.0;
    for (int64_t t = 0; t < f.frames; ++t) mu += f.at(m, t);
    CHECK(std::abs(mu / f.frames) < 1e-12);
  }
  FeatureMatrix again = mean_normalize(f);
  for (size_t i = 0; i < f.values.size(); ++i)
    CHECK(again.values[i] == doctest::Approx(f.values[i]).epsilon(1e-12));

  FeatureMatrix cst;
  cst.n_mels = 3;
  cst.frames = 4;
  cst.values.assign(12, 5.0);
  FeatureMatrix z = mean_normalize(cst);
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("spec_augment masks and determinism") {
  FeatureMatrix ones;
  ones.n_mels = 20;
  ones.frames = 50;
  ones.values.assign(20 * 50, 1.0);

  Rng rng(5);
  FeatureMatrix keep = spec_augment(ones, 0, 0, rng);
  CHECK(keep.values == ones.values);

  Rng rng_a(9), rng_b(9);
  FeatureMatrix a = spec_augment(ones, 10, 5, rng_a);
  FeatureMatrix b = spec_augment(ones, 10, 5, rng_b);
  CHECK(a.values == b.values);  // same seed, same mask

  // zero count equals wf*frames + wt*n_mels - wf*wt; recover the widths by
  // counting fully-zero rows and columns of the ones-matrix
  int64_t wf = 0, wt = 0;
  for (int64_t m = 0; m < a.n_mels; ++m) {
    bool all = true;
    for (int64_t t = 0; t < a.frames; ++t) all = all && a.at(m, t) == 0.0;
    wf += all;
  }
  for (int64_t t = 0; t < a.frames; ++t) {
    bool all = true;
    for (int64_t m = 0; m < a.n_mels; ++m) all = all && a.at(m, t) == 0.0;
    wt += all;
  }
  int64_t zeros = 0;
  for (double v : a.values) zeros += v == 0.0;
  CHECK(zeros == wf * a.frames + wt * a.n_mels - wf * wt);

  CHECK_THROWS_AS(spec_augment(ones, 21, 5, rng), std::invalid_argument);
}

TEST_CASE("random_crop lengths, rotation, wrapping") {
  FeatureMatrix f;
  f.n_mels = 4;
  f.frames = 100;  // 1 s at 10 ms hop
  f.hop_ms = 10.0;
  f.values.resize(400);
  for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<double>(i);

  Rng rng(3);
  FeatureMatrix two = random_crop(f, 2.0, rng);
  CHECK(two.frames == 200);

  // crop equal to input length: a rotation
  FeatureMatrix rot = random_crop(f, 1.0, rng);
  CHECK(rot.frames == 100);
  int64_t start = -1;
  for (int64_t s = 0; s < 100; ++s) {
    if (rot.at(0, 0) == f.at(0, s)) {
      start = s;
      break;
    }
  }
  REQUIRE(start >= 0);
  for (int64_t m = 0; m < 4; ++m)
    for (int64_t t = 0; t < 100; ++t) CHECK(rot.at(m, t) == f.at(m, (start + t) % 100));

  // 1 s input, 3 s crop: cyclic repetition with period 100
  FeatureMatrix three = random_crop(f, 3.0, rng);
  CHECK(three.frames == 300);
  for (int64_t m = 0; m < 4; ++m)
    for (int64_t t = 0; t < 200; ++t) CHECK(three.at(m, t) == three.at(m, t + 100));

  CHECK_THROWS_AS(random_crop(f, 0.0, rng), std::invalid_argument);
}

TEST_CASE("wav round trip") {
  Waveform w = sine(500.0, 0.25);
  const std::string path = (std::filesystem::temp_directory_path() / "svkit_wav_test.wav").string();
  write_wav(path, w);
  Waveform back = read_wav(path);
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(back.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-3));
  std::filesystem::remove(path);
}

TEST_CASE("feature export uses the tensor format") {
  Waveform w = sine(450.0, 0.3);
  FeatureMatrix f = logmel(w);
  Tensor t = f.tensor();
  CHECK(t.shape() == Shape{f.n_mels, f.frames});
  CHECK(t.values() == f.values);
}

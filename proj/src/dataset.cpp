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

#include "svkit/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "svkit/error.hpp"

namespace svkit {

namespace {

// RBJ biquad band-pass (constant skirt gain).
struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  static Biquad bandpass(double f0, double q, double sample_rate) {
    const double w0 = 2.0 * M_PI * f0 / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f{};
    f.b0 = std::sin(w0) / 2.0 / a0;
    f.b1 = 0.0;
    f.b2 = -f.b0;
    f.a1 = -2.0 * std::cos(w0) / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
  }

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

}  // namespace

std::vector<UttRecord> generate_toy_dataset(const std::string& out_dir,
                                            const ToyDatasetOptions& opts) {
  if (opts.speakers < 2) throw ConfigError("toy-dataset: need >= 2 speakers");
  if (opts.utts_per_speaker < 1) throw ConfigError("toy-dataset: need >= 1 utterance per speaker");
  if (opts.duration_lo_s <= 0.06 || opts.duration_hi_s < opts.duration_lo_s)
    throw ConfigError("toy-dataset: bad duration range");
  if (opts.primary_fraction < 0.0 || opts.primary_fraction > 1.0)
    throw ConfigError("toy-dataset: primary_fraction must lie in [0,1]");

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");

  Rng rng(opts.seed);
  std::vector<DatasetEntry> entries;

  for (int64_t s = 0; s < opts.speakers; ++s) {
    // per-speaker signature: three resonances with fixed gains
    double centers[3], qs[3], gains[3];
    for (int k = 0; k < 3; ++k) {
      centers[k] = rng.uniform(300.0, 3200.0);
      qs[k] = rng.uniform(4.0, 9.0);
      gains[k] = rng.uniform(0.5, 1.0);
    }
    const std::string speaker = "spk" + std::to_string(s);
    const std::string gender = (s % 2 == 0) ? "m" : "f";
    const std::string domain = "dom" + std::to_string(s % opts.domains);
    const int64_t primary_count = static_cast<int64_t>(
        std::lround(opts.primary_fraction * static_cast<double>(opts.utts_per_speaker)));

    for (int64_t u = 0; u < opts.utts_per_speaker; ++u) {
      const bool primary = u < primary_count;
      const double dur = rng.uniform(opts.duration_lo_s, opts.duration_hi_s);
      const int64_t n = static_cast<int64_t>(std::lround(dur * opts.sample_rate));

      Waveform w;
      w.sample_rate = opts.sample_rate;
      w.samples.assign(static_cast<size_t>(n), 0.0);

      Biquad filters[3];
      for (int k = 0; k < 3; ++k) {
        const double jitter = 1.0 + rng.uniform(-0.02, 0.02);  // small per-utterance drift
        filters[k] = Biquad::bandpass(centers[k] * jitter, qs[k], opts.sample_rate);
      }
      for (int64_t i = 0; i < n; ++i) {
        const double excitation = rng.normal();
        double v = 0.05 * rng.normal();  // broadband bed
        for (int k = 0; k < 3; ++k) v += gains[k] * filters[k].step(excitation);
        w.samples[static_cast<size_t>(i)] = v;
      }
      // pseudo-language: opposite spectral tilts
      if (primary) {
        double prev = 0.0;  // gentle low-pass
        for (auto& x : w.samples) {
          prev = 0.6 * prev + 0.4 * x;
          x = prev;
        }
      } else {
        double prev = 0.0;  // pre-emphasis
        for (auto& x : w.samples) {
          const double cur = x;
          x = x - 0.7 * prev;
          prev = cur;
        }
      }
      // normalize to a fixed peak
      double peak = 1e-9;
      for (double x : w.samples) peak = std::max(peak, std::abs(x));
      for (auto& x : w.samples) x *= 0.5 / peak;

      DatasetEntry e;
      e.utt.id = speaker + "_u" + std::to_string(u);
      e.utt.speaker = speaker;
      e.utt.language = primary ? "farsi" : "english";
      e.utt.gender = gender;
      e.utt.domain = domain;
      e.utt.duration_s = static_cast<double>(n) / opts.sample_rate;
      e.path = (fs::path(out_dir) / "wav" / (e.utt.id + ".wav")).string();
      write_wav(e.path, w);
      entries.push_back(std::move(e));
    }
  }

  write_metadata((fs::path(out_dir) / "metadata.tsv").string(), entries);
  std::vector<UttRecord> records;
  records.reserve(entries.size());
  for (const auto& e : entries) records.push_back(e.utt);
  return records;
}

std::vector<DatasetEntry> read_metadata(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open metadata: " + path);
  std::vector<DatasetEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    DatasetEntry e;
    if (!(ls >> e.utt.id >> e.path >> e.utt.speaker >> e.utt.language >> e.utt.gender >>
          e.utt.domain >> e.utt.duration_s))
      throw DataError("malformed metadata line: " + line);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_metadata(const std::string& path, const std::vector<DatasetEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write metadata: " + path);
  char dur[32];
  for (const auto& e : entries) {
    std::snprintf(dur, sizeof(dur), "%.3f", e.utt.duration_s);
    os << e.utt.id << " " << e.path << " " << e.utt.speaker << " " << e.utt.language << " "
       << e.utt.gender << " " << e.utt.domain << " " << dur << "\n";
  }
}

}  // namespace svkit

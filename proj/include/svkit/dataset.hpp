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

#ifndef SVKIT_DATASET_HPP_
#define SVKIT_DATASET_HPP_

#include <string>
#include <vector>

#include "svkit/rng.hpp"
#include "svkit/scoring.hpp"
#include "svkit/wav.hpp"

namespace svkit {

struct ToyDatasetOptions {
  int64_t speakers = 8;
  int64_t utts_per_speaker = 4;
  double duration_lo_s = 1.5;
  double duration_hi_s = 3.0;
  int sample_rate = 16000;
  // fraction of each speaker's utterances in the primary pseudo-language
  double primary_fraction = 1.0;
  int64_t domains = 1;
  uint64_t seed = 1;
};

// Synthesizes labeled waveforms: every speaker gets a fixed set of resonant
// bands (band-passed noise signatures); the two pseudo-languages differ by
// spectral tilt; genders alternate; domains round-robin over speakers.
// Writes <out_dir>/wav/*.wav and <out_dir>/metadata.tsv, returns the records.
std::vector<UttRecord> generate_toy_dataset(const std::string& out_dir,
                                            const ToyDatasetOptions& opts);

// metadata.tsv: "id path speaker language gender domain duration_s"
struct DatasetEntry {
  UttRecord utt;
  std::string path;
};
std::vector<DatasetEntry> read_metadata(const std::string& path);
void write_metadata(const std::string& path, const std::vector<DatasetEntry>& entries);

}  // namespace svkit

#endif  // SVKIT_DATASET_HPP_

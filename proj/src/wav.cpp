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

#include "svkit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "svkit/error.hpp"

namespace svkit {

namespace {

template <typename T>
T read_le(std::istream& is, const std::string& path) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) throw DataError("truncated wav: " + path);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open wav: " + path);

  char riff[4], wave[4];
  is.read(riff, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0) throw DataError("not a RIFF file: " + path);
  read_le<uint32_t>(is, path);  // chunk size
  is.read(wave, 4);
  if (!is || std::memcmp(wave, "WAVE", 4) != 0) throw DataError("not a WAVE file: " + path);

  uint16_t channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  Waveform w;

  while (is) {
    char id[4];
    is.read(id, 4);
    if (!is) break;
    const uint32_t size = read_le<uint32_t>(is, path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      const uint16_t format = read_le<uint16_t>(is, path);
      channels = read_le<uint16_t>(is, path);
      sample_rate = read_le<uint32_t>(is, path);
      read_le<uint32_t>(is, path);  // byte rate
      read_le<uint16_t>(is, path);  // block align
      bits = read_le<uint16_t>(is, path);
      if (format != 1) throw DataError("wav: only PCM supported: " + path);
      if (channels != 1) throw DataError("wav: only mono supported: " + path);
      if (bits != 16) throw DataError("wav: only 16-bit supported: " + path);
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data before fmt: " + path);
      const size_t n = size / 2;
      w.samples.resize(n);
      std::vector<int16_t> raw(n);
      is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
      if (!is) throw DataError("truncated wav data: " + path);
      for (size_t i = 0; i < n; ++i) w.samples[i] = raw[i] / 32768.0;
      w.sample_rate = static_cast<int>(sample_rate);
      return w;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
    }
  }
  throw DataError("wav: no data chunk: " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path);

  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  write_le<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_le<uint32_t>(os, 16);
  write_le<uint16_t>(os, 1);  // PCM
  write_le<uint16_t>(os, 1);  // mono
  write_le<uint32_t>(os, static_cast<uint32_t>(w.sample_rate));
  write_le<uint32_t>(os, static_cast<uint32_t>(w.sample_rate * 2));
  write_le<uint16_t>(os, 2);
  write_le<uint16_t>(os, 16);
  os.write("data", 4);
  write_le<uint32_t>(os, data_bytes);
  for (double s : w.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const int32_t q = static_cast<int32_t>(std::lrint(clipped * 32767.0));
    write_le<int16_t>(os, static_cast<int16_t>(q));
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace svkit

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

#include "svkit/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "svkit/error.hpp"

namespace svkit {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'T', '1'};

template <typename T>
void write_le(std::ostream& os, T value) {
  // Serialized layout is little-endian; this build targets LE hosts.
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) throw DataError("tensor read: truncated stream");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic, 4);
  write_le<uint32_t>(os, static_cast<uint32_t>(t.rank()));
  for (int64_t a = 0; a < t.rank(); ++a) write_le<uint64_t>(os, static_cast<uint64_t>(t.dim(a)));
  for (double v : t.values()) write_le<double>(os, v);
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw DataError("tensor read: bad magic");
  const uint32_t rank = read_le<uint32_t>(is);
  if (rank > 8) throw DataError("tensor read: implausible rank");
  Shape shape(rank);
  for (uint32_t a = 0; a < rank; ++a) {
    shape[a] = static_cast<int64_t>(read_le<uint64_t>(is));
    if (shape[a] <= 0) throw DataError("tensor read: non-positive extent");
  }
  const int64_t n = shape_numel(shape);
  std::vector<double> values(static_cast<size_t>(n));
  for (auto& v : values) v = read_le<double>(is);
  return Tensor::from(shape, std::move(values));
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path);
  write_tensor(os, t);
  if (!os) throw DataError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_tensor(is);
}

}  // namespace svkit

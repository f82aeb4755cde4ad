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

#include "svkit/archive.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "svkit/error.hpp"
#include "svkit/tensor.hpp"
#include "svkit/tensor_io.hpp"

namespace svkit {

struct ArchiveWriter::Impl {
  std::ofstream idx, bin, meta;
  std::string base;
  bool open = true;
};

ArchiveWriter::ArchiveWriter(const std::string& base) : impl_(new Impl) {
  impl_->base = base;
  impl_->idx.open(base + ".idx");
  impl_->bin.open(base + ".bin", std::ios::binary);
  impl_->meta.open(base + ".meta");
  if (!impl_->idx || !impl_->bin || !impl_->meta)
    throw DataError("cannot create archive at " + base);
}

ArchiveWriter::~ArchiveWriter() {
  close();
  delete impl_;
}

void ArchiveWriter::add(const std::string& id, const std::vector<double>& vec,
                        const ArchiveMeta& meta) {
  if (!impl_->open) throw DataError("archive writer already closed");
  const auto offset = impl_->bin.tellp();
  impl_->idx << id << " " << offset << "\n";
  write_tensor(impl_->bin, Tensor::from({static_cast<int64_t>(vec.size())}, vec));
  char dur[32];
  std::snprintf(dur, sizeof(dur), "%.3f", meta.duration_s);
  impl_->meta << id << " " << dur << " " << meta.language << " " << meta.gender << " "
              << meta.domain << "\n";
}

void ArchiveWriter::close() {
  if (!impl_->open) return;
  impl_->open = false;
  impl_->idx.close();
  impl_->bin.close();
  impl_->meta.close();
}

Archive Archive::load(const std::string& base) {
  std::ifstream idx(base + ".idx");
  if (!idx) throw DataError("cannot open archive index: " + base + ".idx");
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw DataError("cannot open archive payload: " + base + ".bin");

  Archive a;
  std::string id;
  uint64_t offset;
  while (idx >> id >> offset) {
    bin.seekg(static_cast<std::streamoff>(offset));
    const Tensor t = read_tensor(bin);
    a.order_.push_back(id);
    a.vectors_[id] = t.values();
  }

  std::ifstream meta(base + ".meta");
  if (meta) {
    std::string line;
    while (std::getline(meta, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      ArchiveMeta m;
      std::string mid;
      ls >> mid >> m.duration_s >> m.language >> m.gender >> m.domain;
      a.metas_[mid] = m;
    }
  }
  return a;
}

const std::vector<double>& Archive::vector(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw DataError("archive: unresolved id " + id);
  return it->second;
}

const ArchiveMeta& Archive::meta(const std::string& id) const {
  auto it = metas_.find(id);
  if (it == metas_.end()) throw DataError("archive: no metadata for id " + id);
  return it->second;
}

}  // namespace svkit

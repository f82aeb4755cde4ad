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

#ifndef SVKIT_ARCHIVE_HPP_
#define SVKIT_ARCHIVE_HPP_

#include <map>
#include <string>
#include <vector>

namespace svkit {

struct ArchiveMeta {
  double duration_s = 0.0;
  std::string language = "-";
  std::string gender = "-";
  std::string domain = "-";
};

// On-disk embedding store: <base>.idx maps id -> byte offset into
// <base>.bin (tensor records); <base>.meta holds one sidecar line per id:
// "id duration_s language gender domain".
class ArchiveWriter {
 public:
  explicit ArchiveWriter(const std::string& base);
  ~ArchiveWriter();
  void add(const std::string& id, const std::vector<double>& vec, const ArchiveMeta& meta);
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

class Archive {
 public:
  static Archive load(const std::string& base);

  bool has(const std::string& id) const { return vectors_.count(id) > 0; }
  const std::vector<double>& vector(const std::string& id) const;
  const ArchiveMeta& meta(const std::string& id) const;
  const std::vector<std::string>& ids() const { return order_; }
  size_t size() const { return order_.size(); }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<double>> vectors_;
  std::map<std::string, ArchiveMeta> metas_;
};

}  // namespace svkit

#endif  // SVKIT_ARCHIVE_HPP_

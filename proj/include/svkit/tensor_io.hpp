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

#ifndef SVKIT_TENSOR_IO_HPP_
#define SVKIT_TENSOR_IO_HPP_

#include <iosfwd>
#include <string>

#include "svkit/tensor.hpp"

namespace svkit {

// Binary tensor record, little-endian:
//   magic "FVT1" | u32 rank | u64 extents[rank] | f64 payload
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace svkit

#endif  // SVKIT_TENSOR_IO_HPP_

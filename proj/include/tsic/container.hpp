// Copyright 2026 The TSIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSIC_CONTAINER_HPP_
#define TSIC_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "tsic/tensor.hpp"

namespace tsic {

// Self-describing file of named float64 arrays plus a JSON metadata object.
//
//   "TSCK" | u32 format version | u64 header bytes | JSON header | data
//
// The header lists each array's name, shape and byte offset into the data
// section. All integers and floats are little-endian.
class ArrayContainer {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  void put(const std::string& name, const Tensor& t) { arrays_[name] = t; }
  bool has(const std::string& name) const { return arrays_.count(name) > 0; }
  const Tensor& get(const std::string& name) const;
  const std::map<std::string, Tensor>& arrays() const { return arrays_; }

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  std::string serialize() const;
  static ArrayContainer deserialize(const std::string& bytes);

  // Writes to a sibling temp file, then renames over the target.
  void save(const std::filesystem::path& path) const;
  static ArrayContainer load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor> arrays_;
  nlohmann::json meta_ = nlohmann::json::object();
};

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes);

}  // namespace tsic

#endif  // TSIC_CONTAINER_HPP_

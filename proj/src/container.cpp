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

#include "tsic/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsic {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'S', 'C', 'K'};

template <typename T>
void append_pod(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T read_pod(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw std::runtime_error("container: truncated");
  }
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

const Tensor& ArrayContainer::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) {
    throw std::runtime_error("container: missing array '" + name + "'");
  }
  return it->second;
}

std::string ArrayContainer::serialize() const {
  nlohmann::json header;
  header["meta"] = meta_;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : arrays_) {
    const Shape& s = t.shape();
    header["arrays"].push_back(
        {{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  }
  const std::string head = header.dump();
  std::string out(kMagic, 4);
  append_pod<std::uint32_t>(out, kFormatVersion);
  append_pod<std::uint64_t>(out, head.size());
  out += head;
  for (const auto& [name, t] : arrays_) {
    out.append(reinterpret_cast<const char*>(t.data()),
               t.size() * sizeof(double));
  }
  return out;
}

ArrayContainer ArrayContainer::deserialize(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("container: bad magic");
  }
  std::size_t pos = 4;
  const auto version = read_pod<std::uint32_t>(bytes, pos);
  if (version != kFormatVersion) {
    throw std::runtime_error("container: unsupported format version " +
                             std::to_string(version));
  }
  const auto head_len = read_pod<std::uint64_t>(bytes, pos);
  if (pos + head_len > bytes.size()) {
    throw std::runtime_error("container: truncated header");
  }
  const nlohmann::json header =
      nlohmann::json::parse(bytes.substr(pos, head_len));
  pos += head_len;
  const std::size_t data_begin = pos;
  ArrayContainer c;
  c.meta_ = header.value("meta", nlohmann::json::object());
  for (const auto& a : header.at("arrays")) {
    const auto dims = a.at("shape").get<std::vector<int>>();
    if (dims.size() != 4) throw std::runtime_error("container: bad shape");
    Shape s{dims[0], dims[1], dims[2], dims[3]};
    const std::size_t off = data_begin + a.at("offset").get<std::uint64_t>();
    const std::size_t len = s.numel() * sizeof(double);
    if (off + len > bytes.size()) {
      throw std::runtime_error("container: truncated array data");
    }
    Tensor t(s);
    std::memcpy(t.data(), bytes.data() + off, len);
    c.arrays_[a.at("name").get<std::string>()] = std::move(t);
  }
  return c;
}

void ArrayContainer::save(const fs::path& path) const {
  write_file_atomic(path, serialize());
}

ArrayContainer ArrayContainer::load(const fs::path& path) {
  return deserialize(read_file_bytes(path));
}

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace tsic

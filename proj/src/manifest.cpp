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

#include "tsic/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tsic {

namespace fs = std::filesystem;

DatasetManifest load_manifest(const fs::path& path, bool check_images) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object() || !j.contains("image") || !j["image"].is_string()) {
      fail("record needs a string field 'image'");
    }
    if (!j.contains("captions") || !j["captions"].is_array()) {
      fail("record needs an array field 'captions'");
    }
    ManifestRecord rec;
    rec.image = j["image"].get<std::string>();
    for (const auto& c : j["captions"]) {
      if (!c.is_string()) fail("captions must be strings");
      rec.captions.push_back(c.get<std::string>());
    }
    if (rec.captions.empty()) fail("captions list is empty");
    fs::path p(rec.image);
    rec.resolved = p.is_absolute() ? p : base / p;
    if (check_images && !fs::exists(rec.resolved)) {
      fail("image not found: " + rec.resolved.string());
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const auto& rec : manifest.records) {
    nlohmann::json j;
    j["image"] = rec.image;
    j["captions"] = rec.captions;
    out << j.dump() << '\n';
  }
}

}  // namespace tsic

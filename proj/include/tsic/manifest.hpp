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

#ifndef TSIC_MANIFEST_HPP_
#define TSIC_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace tsic {

struct ManifestRecord {
  std::string image;                  // as written in the file
  std::filesystem::path resolved;     // image relative to the manifest dir
  std::vector<std::string> captions;  // at least one
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
};

// One JSON object per line: {"image": "...", "captions": ["...", ...]}.
// Blank lines are skipped. Errors name the 1-based line number.
DatasetManifest load_manifest(const std::filesystem::path& path,
                              bool check_images = true);
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);

}  // namespace tsic

#endif  // TSIC_MANIFEST_HPP_

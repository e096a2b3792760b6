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

#ifndef TSIC_SYNTHETIC_HPP_
#define TSIC_SYNTHETIC_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsic/image.hpp"
#include "tsic/manifest.hpp"

namespace tsic {

struct SyntheticOptions {
  int count = 200;
  int size = 64;
  std::uint64_t seed = 0;
};

// A textured shape on a scene-coloured background. Captions name the
// scene, colour, shape and texture; the shading ramp and stripe period are
// left out of the captions.
struct SyntheticSample {
  RawImage image;
  std::vector<std::string> captions;  // five paraphrases
  std::string scene, color, shape, texture;
};

SyntheticSample make_synthetic_sample(int index, const SyntheticOptions& opt);

// Writes img_XXXX.png files and manifest.jsonl into `dir`.
DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                        const SyntheticOptions& opt);

}  // namespace tsic

#endif  // TSIC_SYNTHETIC_HPP_

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

#ifndef TSIC_IMAGE_IO_HPP_
#define TSIC_IMAGE_IO_HPP_

#include <filesystem>

#include "tsic/image.hpp"

namespace tsic {

// Decodes PNG or JPEG (sniffed from the file signature). Gray and
// gray+alpha PNGs are returned with their native channel count; RGBA keeps
// its alpha channel, so callers decide how to reject or convert.
RawImage read_image(const std::filesystem::path& path);

// Writes 8-bit PNG with 1 (gray) or 3 (RGB) channels.
void write_png(const std::filesystem::path& path, const RawImage& image);

}  // namespace tsic

#endif  // TSIC_IMAGE_IO_HPP_

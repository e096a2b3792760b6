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

#ifndef TSIC_IMAGE_HPP_
#define TSIC_IMAGE_HPP_

#include <cstdint>
#include <vector>

#include "tsic/tensor.hpp"

namespace tsic {

// Smallest spatial extent accepted anywhere in the codec.
inline constexpr int kMinImageSide = 16;

struct ImageDims {
  int height = 0;
  int width = 0;
  bool operator==(const ImageDims&) const = default;
};

// 8-bit interleaved pixels (row-major, channel-last).
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

// RGB image in [-1, 1], stored as a [1, 3, H, W] tensor.
class ImageTensor {
 public:
  ImageTensor() = default;
  // Validates channel count, minimum size and finiteness; clamps to [-1, 1].
  explicit ImageTensor(Tensor pixels);

  const Tensor& pixels() const { return pixels_; }
  int height() const { return pixels_.h(); }
  int width() const { return pixels_.w(); }
  ImageDims dims() const { return {pixels_.h(), pixels_.w()}; }

 private:
  Tensor pixels_;
};

ImageTensor normalize_image(const RawImage& raw);
RawImage denormalize_image(const ImageTensor& img);

struct PaddedImage {
  ImageTensor image;
  ImageDims original;
};

// Reflect-pads bottom/right edges up to the next multiple.
PaddedImage pad_to_multiple(const ImageTensor& img, int multiple);
ImageTensor crop_to(const ImageTensor& img, ImageDims dims);

// Stacks images of identical size into an [N, 3, H, W] batch.
Tensor stack_images(const std::vector<const ImageTensor*>& images);
ImageTensor image_from_batch(const Tensor& batch, int index);

}  // namespace tsic

#endif  // TSIC_IMAGE_HPP_

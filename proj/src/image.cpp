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

#include "tsic/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace tsic {

ImageTensor::ImageTensor(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.n() != 1 || pixels_.c() != 3) {
    throw std::invalid_argument("ImageTensor: expected [1,3,H,W], got " +
                                pixels_.shape().str());
  }
  if (pixels_.h() < kMinImageSide || pixels_.w() < kMinImageSide) {
    throw std::invalid_argument(
        "ImageTensor: " + std::to_string(pixels_.h()) + "x" +
        std::to_string(pixels_.w()) + " is below the " +
        std::to_string(kMinImageSide) + "-pixel minimum");
  }
  for (double& v : pixels_.values()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ImageTensor: non-finite pixel value");
    }
    v = std::clamp(v, -1.0, 1.0);
  }
}

ImageTensor normalize_image(const RawImage& raw) {
  if (raw.channels != 3) {
    throw std::invalid_argument("normalize_image: expected 3 channels, got " +
                                std::to_string(raw.channels));
  }
  if (raw.data.size() !=
      static_cast<std::size_t>(raw.height) * raw.width * 3) {
    throw std::invalid_argument("normalize_image: buffer size mismatch");
  }
  Tensor t({1, 3, raw.height, raw.width});
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = raw.data[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c];
        t.at(0, c, y, x) = 2.0 * v / 255.0 - 1.0;
      }
    }
  }
  return ImageTensor(std::move(t));
}

RawImage denormalize_image(const ImageTensor& img) {
  RawImage raw{img.height(), img.width(), 3, {}};
  raw.data.resize(static_cast<std::size_t>(raw.height) * raw.width * 3);
  const Tensor& t = img.pixels();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::round((t.at(0, c, y, x) + 1.0) * 255.0 / 2.0);
        raw.data[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return raw;
}

namespace {

int reflect_index(int i, int size) {
  if (i < size) return i;
  return 2 * (size - 1) - i;
}

}  // namespace

PaddedImage pad_to_multiple(const ImageTensor& img, int multiple) {
  if (multiple < 1) {
    throw std::invalid_argument("pad_to_multiple: multiple must be >= 1");
  }
  const int h = img.height();
  const int w = img.width();
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return {img, img.dims()};
  if (ph - h >= h || pw - w >= w) {
    throw std::invalid_argument("pad_to_multiple: image too small to reflect");
  }
  Tensor out({1, 3, ph, pw});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect_index(y, h);
      for (int x = 0; x < pw; ++x) {
        out.at(0, c, y, x) = img.pixels().at(0, c, sy, reflect_index(x, w));
      }
    }
  }
  return {ImageTensor(std::move(out)), img.dims()};
}

ImageTensor crop_to(const ImageTensor& img, ImageDims dims) {
  if (dims.height > img.height() || dims.width > img.width()) {
    throw std::invalid_argument("crop_to: target larger than image");
  }
  if (dims == img.dims()) return img;
  Tensor out({1, 3, dims.height, dims.width});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < dims.height; ++y) {
      std::memcpy(&out.at(0, c, y, 0), img.pixels().data() + img.pixels().index(0, c, y, 0),
                  sizeof(double) * dims.width);
    }
  }
  return ImageTensor(std::move(out));
}

Tensor stack_images(const std::vector<const ImageTensor*>& images) {
  std::vector<const Tensor*> parts;
  parts.reserve(images.size());
  for (const ImageTensor* im : images) parts.push_back(&im->pixels());
  return concat_batch(parts);
}

ImageTensor image_from_batch(const Tensor& batch, int index) {
  return ImageTensor(batch.slice(index, 1));
}

}  // namespace tsic

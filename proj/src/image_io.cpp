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

#include "tsic/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

namespace tsic {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

RawImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error("PNG decode failed for " + path.string() + ": " +
                             image.message);
  }
  RawImage raw;
  raw.height = static_cast<int>(image.height);
  raw.width = static_cast<int>(image.width);
  const bool color = image.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = image.format & PNG_FORMAT_FLAG_ALPHA;
  if (color) {
    image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    raw.channels = alpha ? 4 : 3;
  } else {
    image.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    raw.channels = alpha ? 2 : 1;
  }
  raw.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error("PNG decode failed for " + path.string() + ": " +
                             image.message);
  }
  return raw;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

RawImage read_jpeg(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  RawImage raw;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("JPEG decode failed for " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raw.height = static_cast<int>(cinfo.output_height);
  raw.width = static_cast<int>(cinfo.output_width);
  raw.channels = cinfo.output_components;
  raw.data.resize(static_cast<std::size_t>(raw.height) * raw.width *
                  raw.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data.data() + static_cast<std::size_t>(
                                         cinfo.output_scanline) *
                                         raw.width * raw.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return raw;
}

}  // namespace

RawImage read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), sizeof(sig));
  if (in.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (in.gcount() >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) {
    return read_jpeg(path);
  }
  throw std::runtime_error("unsupported image format: " + path.string());
}

void write_png(const fs::path& path, const RawImage& raw) {
  if (raw.channels != 1 && raw.channels != 3) {
    throw std::invalid_argument("write_png: expected 1 or 3 channels");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raw.width);
  image.height = static_cast<png_uint_32>(raw.height);
  image.format = raw.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raw.data.data(), 0,
                               nullptr)) {
    throw std::runtime_error("cannot write PNG " + path.string() + ": " +
                             image.message);
  }
}

}  // namespace tsic

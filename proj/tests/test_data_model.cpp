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

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "tsic/container.hpp"
#include "tsic/image.hpp"
#include "tsic/image_io.hpp"
#include "tsic/manifest.hpp"

using tsic::ImageTensor;
using tsic::RawImage;
using tsic::Tensor;

namespace {

RawImage constant_raw(int h, int w, std::uint8_t v) {
  return {h, w, 3, std::vector<std::uint8_t>(h * w * 3, v)};
}

ImageTensor random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ImageTensor(tsic::test::random_tensor({1, 3, h, w}, rng));
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("normalize_image endpoints and midpoint") {
  const ImageTensor lo = tsic::normalize_image(constant_raw(16, 16, 0));
  const ImageTensor hi = tsic::normalize_image(constant_raw(16, 16, 255));
  for (double v : lo.pixels().values()) REQUIRE(v == -1.0);
  for (double v : hi.pixels().values()) REQUIRE(v == 1.0);
  const ImageTensor mid = tsic::normalize_image(constant_raw(16, 16, 128));
  CHECK(mid.pixels()[0] == doctest::Approx(0.00392156862745098).epsilon(1e-12));
}

TEST_CASE("normalize_image rejects non-RGB input") {
  RawImage gray{16, 16, 1, std::vector<std::uint8_t>(256, 0)};
  CHECK_THROWS_AS(tsic::normalize_image(gray), std::invalid_argument);
}

TEST_CASE("normalize then denormalize is identity on the byte lattice") {
  RawImage raw{16, 16, 3, std::vector<std::uint8_t>(16 * 16 * 3)};
  for (std::size_t i = 0; i < raw.data.size(); ++i) raw.data[i] = i % 256;
  const RawImage back = tsic::denormalize_image(tsic::normalize_image(raw));
  CHECK(back.height == 16);
  CHECK(back.width == 16);
  CHECK(back.channels == 3);
  CHECK(back.data == raw.data);
}

TEST_CASE("ImageTensor validation") {
  CHECK_THROWS(ImageTensor(Tensor({1, 3, 1, 32})));
  CHECK_THROWS(ImageTensor(Tensor({1, 3, 15, 32})));
  CHECK_THROWS(ImageTensor(Tensor({1, 1, 16, 16})));
  CHECK_THROWS(ImageTensor(Tensor({2, 3, 16, 16})));
  Tensor bad({1, 3, 16, 16});
  bad[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(ImageTensor(bad));

  Tensor wide({1, 3, 16, 16}, 3.0);
  wide[0] = -7.0;
  const ImageTensor clamped(wide);
  CHECK(clamped.pixels()[0] == -1.0);
  CHECK(clamped.pixels()[1] == 1.0);
}

TEST_CASE("pad_to_multiple") {
  SUBCASE("aligned input is unchanged") {
    const ImageTensor img = random_image(256, 256, 1);
    const tsic::PaddedImage p = tsic::pad_to_multiple(img, 16);
    CHECK(p.image.dims() == img.dims());
    CHECK(tsic::max_abs_diff(p.image.pixels(), img.pixels()) == 0.0);
  }
  SUBCASE("250 pads to 256 by reflection") {
    const ImageTensor img = random_image(250, 250, 2);
    const tsic::PaddedImage p = tsic::pad_to_multiple(img, 16);
    CHECK(p.image.height() == 256);
    CHECK(p.image.width() == 256);
    CHECK(p.original == tsic::ImageDims{250, 250});
    for (int k = 0; k < 6; ++k) {
      CHECK(p.image.pixels().at(0, 1, 250 + k, 17) ==
            img.pixels().at(0, 1, 248 - k, 17));
      CHECK(p.image.pixels().at(0, 2, 40, 250 + k) ==
            img.pixels().at(0, 2, 40, 248 - k));
    }
  }
  SUBCASE("multiple must be positive") {
    CHECK_THROWS(tsic::pad_to_multiple(random_image(16, 16, 3), 0));
  }
}

TEST_CASE("pad then crop is identity for all sizes from 16") {
  for (int h = 16; h <= 40; h += 3) {
    for (int w = 16; w <= 40; w += 5) {
      const ImageTensor img = random_image(h, w, h * 100 + w);
      const tsic::PaddedImage p = tsic::pad_to_multiple(img, 16);
      CHECK(p.image.height() % 16 == 0);
      CHECK(p.image.width() % 16 == 0);
      CHECK(p.image.height() - h < 16);
      const ImageTensor back = tsic::crop_to(p.image, p.original);
      CHECK(tsic::max_abs_diff(back.pixels(), img.pixels()) == 0.0);
    }
  }
}

TEST_CASE("manifest parsing") {
  tsic::test::TempDir dir("manifest");
  const auto path = dir.path() / "m.jsonl";

  SUBCASE("two records") {
    write_text(path,
               "{\"image\": \"a.png\", \"captions\": [\"a red circle\"]}\n"
               "\n"
               "{\"image\": \"b.png\", \"captions\": [\"x\", \"y\"]}\n");
    const auto m = tsic::load_manifest(path, false);
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].image == "a.png");
    CHECK(m.records[0].resolved == dir.path() / "a.png");
    CHECK(m.records[1].captions.size() == 2);
  }
  SUBCASE("empty captions name the line") {
    write_text(path,
               "{\"image\": \"a.png\", \"captions\": [\"ok\"]}\n"
               "{\"image\": \"b.png\", \"captions\": []}\n");
    try {
      tsic::load_manifest(path, false);
      FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("malformed line names the line") {
    write_text(path, "{\"image\": \"a.png\", \"captions\": [\"ok\"]}\n{oops\n");
    try {
      tsic::load_manifest(path, false);
      FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("missing images are rejected when checked") {
    write_text(path, "{\"image\": \"nope.png\", \"captions\": [\"ok\"]}\n");
    CHECK_THROWS(tsic::load_manifest(path, true));
  }
}

TEST_CASE("200-record manifest round trip preserves order and bytes") {
  tsic::test::TempDir dir("manifest200");
  tsic::DatasetManifest m;
  for (int i = 0; i < 200; ++i) {
    tsic::ManifestRecord r;
    r.image = "img_" + std::to_string(i) + ".png";
    r.captions = {"caption \"" + std::to_string(i) + "\" \xC3\xA9",
                  "second\tline " + std::to_string(i * 7)};
    m.records.push_back(r);
  }
  const auto path = dir.path() / "m.jsonl";
  tsic::write_manifest(path, m);
  const auto back = tsic::load_manifest(path, false);
  REQUIRE(back.records.size() == 200);
  for (int i = 0; i < 200; ++i) {
    CHECK(back.records[i].image == m.records[i].image);
    CHECK(back.records[i].captions == m.records[i].captions);
  }
  const auto path2 = dir.path() / "m2.jsonl";
  tsic::write_manifest(path2, back);
  CHECK(tsic::read_file_bytes(path) == tsic::read_file_bytes(path2));
}

TEST_CASE("PNG write and read round trip") {
  tsic::test::TempDir dir("png");
  RawImage raw{17, 23, 3, std::vector<std::uint8_t>(17 * 23 * 3)};
  std::mt19937_64 rng(4);
  for (auto& v : raw.data) v = rng() & 0xFF;
  tsic::write_png(dir.path() / "x.png", raw);
  const RawImage back = tsic::read_image(dir.path() / "x.png");
  CHECK(back.height == 17);
  CHECK(back.width == 23);
  CHECK(back.data == raw.data);
  CHECK_THROWS(tsic::read_image(dir.path() / "missing.png"));
}

TEST_CASE("array container round trip") {
  tsic::test::TempDir dir("container");
  std::mt19937_64 rng(5);
  tsic::ArrayContainer c;
  c.put("a", tsic::test::random_tensor({2, 3, 4, 5}, rng));
  c.put("b", Tensor({1, 1, 1, 7}, 0.25));
  c.meta()["model"] = "x";
  c.save(dir.path() / "c.bin");
  const auto back = tsic::ArrayContainer::load(dir.path() / "c.bin");
  CHECK(back.meta()["model"] == "x");
  CHECK(tsic::max_abs_diff(back.get("a"), c.get("a")) == 0.0);
  CHECK(back.get("b").shape() == tsic::Shape{1, 1, 1, 7});
  CHECK_THROWS(back.get("missing"));
  std::string bytes = c.serialize();
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS(tsic::ArrayContainer::deserialize(bytes));
}

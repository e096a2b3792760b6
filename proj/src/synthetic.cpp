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

#include "tsic/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "tsic/image_io.hpp"

namespace tsic {

namespace {

struct Named {
  const char* name;
  std::array<double, 3> rgb;
};

constexpr Named kScenes[] = {
    {"grassy", {60, 140, 60}},  {"sandy", {210, 190, 130}},
    {"snowy", {232, 234, 245}}, {"night", {22, 26, 64}},
    {"sunset", {228, 118, 62}}, {"ocean", {32, 92, 170}}};

constexpr Named kColors[] = {
    {"red", {205, 38, 38}},     {"blue", {40, 62, 215}},
    {"yellow", {238, 214, 40}}, {"purple", {132, 48, 168}},
    {"white", {248, 248, 248}}, {"black", {16, 16, 16}},
    {"orange", {245, 142, 28}}, {"pink", {242, 128, 182}}};

constexpr const char* kShapes[] = {"circle", "square", "triangle"};

struct Texture {
  const char* words;
  int kind;  // 0 plain, 1 horizontal, 2 vertical, 3 checkered
};
constexpr Texture kTextures[] = {{"plain", 0},
                                 {"horizontal stripes", 1},
                                 {"vertical stripes", 2},
                                 {"checkered", 3}};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], std::mt19937_64& rng) {
  return arr[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

bool inside(const std::string& shape, double x, double y, double cx, double cy,
            double r) {
  const double dx = x - cx, dy = y - cy;
  if (shape == "circle") return dx * dx + dy * dy <= r * r;
  if (shape == "square") return std::abs(dx) <= r && std::abs(dy) <= r;
  // Upward triangle inscribed in the square of half-width r.
  if (dy < -r || dy > r) return false;
  const double half = r * (dy + r) / (2.0 * r);
  return std::abs(dx) <= half;
}

}  // namespace

SyntheticSample make_synthetic_sample(int index, const SyntheticOptions& opt) {
  std::seed_seq seq{static_cast<std::uint32_t>(opt.seed),
                    static_cast<std::uint32_t>(opt.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5EEDu};
  std::mt19937_64 rng(seq);
  const Named& scene = pick(kScenes, rng);
  const Named& color = pick(kColors, rng);
  const std::string shape = pick(kShapes, rng);
  const Texture& texture = pick(kTextures, rng);
  const int period = std::uniform_int_distribution<int>(0, 1)(rng) ? 4 : 8;

  const int s = opt.size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = s * (0.16 + 0.14 * unit(rng));
  const double cx = r + (s - 2 * r) * unit(rng);
  const double cy = r + (s - 2 * r) * unit(rng);
  const double angle = 2.0 * M_PI * unit(rng);
  const double ramp = 18.0 + 22.0 * unit(rng);

  SyntheticSample out;
  out.scene = scene.name;
  out.color = color.name;
  out.shape = shape;
  out.texture = texture.words;
  out.image = {s, s, 3, std::vector<std::uint8_t>(s * s * 3)};
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double u = ((x - s / 2.0) * std::cos(angle) +
                        (y - s / 2.0) * std::sin(angle)) / s;
      std::array<double, 3> px = scene.rgb;
      for (double& v : px) v += ramp * u;
      if (inside(shape, x + 0.5, y + 0.5, cx, cy, r)) {
        bool dark = false;
        switch (texture.kind) {
          case 1: dark = (y / (period / 2)) % 2 == 1; break;
          case 2: dark = (x / (period / 2)) % 2 == 1; break;
          case 3: dark = ((x / (period / 2)) + (y / (period / 2))) % 2 == 1;
                  break;
          default: break;
        }
        px = color.rgb;
        if (dark) {
          for (double& v : px) v = 0.45 * v + 20.0;
        }
      }
      for (int c = 0; c < 3; ++c) {
        out.image.data[(y * s + x) * 3 + c] = static_cast<std::uint8_t>(
            std::clamp(std::lround(px[c]), 0L, 255L));
      }
    }
  }

  const std::string sc = scene.name, co = color.name, te = texture.words;
  out.captions = {
      "a " + co + " " + shape + " with " + te + " on a " + sc + " background",
      sc + " scene showing a " + co + " " + shape + " with " + te,
      "a " + shape + " that is " + co + " with " + te + ", set against " + sc +
          " surroundings",
      co + " " + te + " " + shape + " over " + sc + " ground",
      "picture of a " + sc + " backdrop with one " + co + " " + shape +
          " in " + te + " pattern"};
  return out;
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                        const SyntheticOptions& opt) {
  if (opt.count < 1 || opt.size < kMinImageSide) {
    throw std::invalid_argument("synthetic: need count >= 1 and size >= 16");
  }
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  for (int i = 0; i < opt.count; ++i) {
    const SyntheticSample s = make_synthetic_sample(i, opt);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.png", i);
    write_png(dir / name, s.image);
    m.records.push_back({name, dir / name, s.captions});
  }
  write_manifest(dir / "manifest.jsonl", m);
  return m;
}

}  // namespace tsic

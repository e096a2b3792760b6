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

#include "tsic/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsic {

namespace {

constexpr int kFhmUpsample = 4;

}  // namespace

Discriminator::Discriminator(const DiscriminatorConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      img1_("disc.img1", 3, cfg.image_channels / 2, {4, 2, 1}, rng),
      img2_("disc.img2", cfg.image_channels / 2, cfg.image_channels, {4, 2, 1},
            rng),
      fuse_img_("disc.fuse_img", cfg.image_channels, cfg.fusion_channels,
                {1, 1, 0}, rng, 1.0),
      fhm_("disc.fhm", cfg.latent_channels, cfg.fusion_channels, {1, 1, 0},
           rng, 1.0),
      fuse_text_("disc.fuse_text", kTextDim, cfg.fusion_channels, rng, 1.0),
      trunk1_("disc.trunk1", cfg.fusion_channels, cfg.fusion_channels,
              {4, 2, 1}, rng),
      trunk2_("disc.trunk2", cfg.fusion_channels, cfg.fusion_channels,
              {4, 2, 1}, rng),
      head_("disc.head", cfg.fusion_channels, 1, {1, 1, 0}, rng, 1.0) {}

std::vector<double> Discriminator::forward(const Tensor& images,
                                           const Tensor& latents,
                                           const Tensor& text) {
  const int n = images.n();
  if (images.c() != 3 || images.h() % kLatentStride != 0 ||
      images.w() % kLatentStride != 0) {
    throw std::invalid_argument("discriminator: bad image batch " +
                                images.shape().str());
  }
  if (latents.n() != n || latents.c() != cfg_.latent_channels ||
      latents.h() * kLatentStride != images.h() ||
      latents.w() * kLatentStride != images.w()) {
    throw std::invalid_argument("discriminator: latent " +
                                latents.shape().str() +
                                " does not match images " +
                                images.shape().str());
  }
  if (text.n() != n || text.c() != kTextDim) {
    throw std::invalid_argument("discriminator: bad text batch " +
                                text.shape().str());
  }
  const Tensor feat =
      img2_act_.forward(img2_.forward(img1_act_.forward(img1_.forward(images))));
  Tensor fused = fuse_img_.forward(feat);
  const Tensor lat =
      nn::upsample_nearest(fhm_.forward(latents), kFhmUpsample);
  if (lat.shape() != fused.shape()) {
    throw std::logic_error("discriminator: FHM grid mismatch");
  }
  add_inplace(fused, lat);
  const Tensor t = fuse_text_.forward(text);
  const std::size_t plane = fused.shape().plane();
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < fused.c(); ++c) {
      const double v = t.sample(i)[c];
      double* p = fused.plane(i, c);
      for (std::size_t k = 0; k < plane; ++k) p[k] += v;
    }
  }
  fused_shape_ = fused.shape();
  Tensor h = fuse_act_.forward(fused);
  h = trunk1_act_.forward(trunk1_.forward(h));
  h = trunk2_act_.forward(trunk2_.forward(h));
  map_ = head_act_.forward(head_.forward(h));
  std::vector<double> scores(n);
  const std::size_t mplane = map_.shape().plane();
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < mplane; ++k) acc += map_.plane(i, 0)[k];
    scores[i] = acc / static_cast<double>(mplane);
  }
  return scores;
}

Tensor Discriminator::backward(std::span<const double> g_scores) {
  if (static_cast<int>(g_scores.size()) != map_.n()) {
    throw std::invalid_argument("discriminator backward: batch mismatch");
  }
  Tensor g_map(map_.shape());
  const std::size_t mplane = map_.shape().plane();
  for (int i = 0; i < map_.n(); ++i) {
    const double g = g_scores[i] / static_cast<double>(mplane);
    double* p = g_map.plane(i, 0);
    for (std::size_t k = 0; k < mplane; ++k) p[k] = g;
  }
  Tensor g = head_.backward(head_act_.backward(g_map));
  g = trunk2_.backward(trunk2_act_.backward(g));
  g = trunk1_.backward(trunk1_act_.backward(g));
  g = fuse_act_.backward(g);

  Tensor g_text({g.n(), g.c(), 1, 1});
  const std::size_t plane = fused_shape_.plane();
  for (int i = 0; i < g.n(); ++i) {
    for (int c = 0; c < g.c(); ++c) {
      double acc = 0.0;
      const double* p = g.plane(i, c);
      for (std::size_t k = 0; k < plane; ++k) acc += p[k];
      g_text.sample(i)[c] = acc;
    }
  }
  fuse_text_.backward(g_text);
  fhm_.backward(nn::upsample_nearest_backward(g, kFhmUpsample));
  Tensor gi = fuse_img_.backward(g);
  gi = img2_.backward(img2_act_.backward(gi));
  return img1_.backward(img1_act_.backward(gi));
}

void Discriminator::collect(nn::ParameterList& out) {
  img1_.collect(out);
  img2_.collect(out);
  fuse_img_.collect(out);
  fhm_.collect(out);
  fuse_text_.collect(out);
  trunk1_.collect(out);
  trunk2_.collect(out);
  head_.collect(out);
}

double discriminate(const DiscriminatorBatch& batch, Discriminator& d) {
  if (!batch.latent.quantized()) {
    throw std::invalid_argument("discriminate: latent must be quantized");
  }
  const TextKind kind = batch.text.kind();
  const bool mismatched_label =
      batch.label == DiscriminatorLabel::kRealMismatched;
  if (mismatched_label != (kind == TextKind::kMismatched) &&
      kind != TextKind::kZero) {
    throw std::invalid_argument(
        std::string("discriminate: label disagrees with text provenance '") +
        to_string(kind) + "'");
  }
  const TextEmbedding texts[] = {batch.text};
  return d.forward(batch.image.pixels(), batch.latent.values,
                   text_batch(texts))[0];
}

AdversarialLoss generator_adv_loss(std::span<const double> scores_fake) {
  AdversarialLoss l;
  if (scores_fake.empty()) return l;
  const double n = static_cast<double>(scores_fake.size());
  for (double s : scores_fake) l.value -= s;
  l.value /= n;
  l.g_fake.assign(scores_fake.size(), -1.0 / n);
  return l;
}

AdversarialLoss discriminator_loss(std::span<const double> fake,
                                   std::span<const double> real,
                                   std::span<const double> mismatched) {
  if (fake.size() != real.size() ||
      (!mismatched.empty() && mismatched.size() != real.size())) {
    throw std::invalid_argument("discriminator_loss: batch size mismatch");
  }
  AdversarialLoss l;
  if (real.empty()) return l;
  const double n = static_cast<double>(real.size());
  auto clamp = [](double s) {
    return std::clamp(s, kScoreEpsilon, 1.0 - kScoreEpsilon);
  };
  auto inside = [](double s) {
    return s > kScoreEpsilon && s < 1.0 - kScoreEpsilon;
  };
  l.g_fake.resize(fake.size());
  l.g_real.resize(real.size());
  l.g_mismatched.resize(mismatched.size());
  for (std::size_t i = 0; i < real.size(); ++i) {
    const double f = clamp(fake[i]);
    const double r = clamp(real[i]);
    l.value += -std::log(1.0 - f) - std::log(r);
    l.g_fake[i] = inside(fake[i]) ? 1.0 / ((1.0 - f) * n) : 0.0;
    l.g_real[i] = inside(real[i]) ? -1.0 / (r * n) : 0.0;
    if (!mismatched.empty()) {
      const double m = clamp(mismatched[i]);
      l.value += -std::log(1.0 - m);
      l.g_mismatched[i] = inside(mismatched[i]) ? 1.0 / ((1.0 - m) * n) : 0.0;
    }
  }
  l.value /= n;
  return l;
}

std::vector<int> derangement(int n, nn::Rng& rng) {
  if (n < 2) {
    throw std::invalid_argument("derangement: need at least 2 elements");
  }
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  // Sattolo's algorithm.
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  return p;
}

}  // namespace tsic

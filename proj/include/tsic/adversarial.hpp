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

#ifndef TSIC_ADVERSARIAL_HPP_
#define TSIC_ADVERSARIAL_HPP_

#include <span>
#include <vector>

#include "tsic/image.hpp"
#include "tsic/nn.hpp"
#include "tsic/text.hpp"
#include "tsic/transforms.hpp"

namespace tsic {

inline constexpr double kScoreEpsilon = 1e-6;

struct DiscriminatorConfig {
  int latent_channels = 64;
  int image_channels = 32;
  int fusion_channels = 64;
  int text_channels = 64;
};

// Image path: two stride-2 convolutions to an (H/4, W/4) grid. The latent
// is projected by a 1x1 convolution (FHM) and nearest-upsampled 4x onto the
// same grid. The text vector is replicated over the grid. Fusion is a 1x1
// convolution over [image, latent, text] channels, computed as the sum of
// its per-input terms. A small conv trunk and a 1x1 sigmoid head follow; the
// score is the mean of the sigmoid map.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, nn::Rng& rng);

  const DiscriminatorConfig& config() const { return cfg_; }

  // images [N,3,H,W], latents [N,C,H/16,W/16], text [N,512,1,1].
  std::vector<double> forward(const Tensor& images, const Tensor& latents,
                              const Tensor& text);
  // Accumulates parameter gradients; returns the gradient w.r.t. images.
  Tensor backward(std::span<const double> g_scores);

  // Sigmoid map of the most recent forward, [N,1,H/16,W/16].
  const Tensor& last_map() const { return map_; }

  nn::Conv2d& head() { return head_; }
  void collect(nn::ParameterList& out);

 private:
  DiscriminatorConfig cfg_;
  nn::Conv2d img1_, img2_;
  nn::Act img1_act_{nn::Activation::kLeakyRelu};
  nn::Act img2_act_{nn::Activation::kLeakyRelu};
  nn::Conv2d fuse_img_;
  nn::Conv2d fhm_;
  nn::Linear fuse_text_;
  nn::Act fuse_act_{nn::Activation::kLeakyRelu};
  nn::Conv2d trunk1_, trunk2_;
  nn::Act trunk1_act_{nn::Activation::kLeakyRelu};
  nn::Act trunk2_act_{nn::Activation::kLeakyRelu};
  nn::Conv2d head_;
  nn::Act head_act_{nn::Activation::kSigmoid};
  Tensor map_;
  Shape fused_shape_;
};

enum class DiscriminatorLabel { kRealMatched, kFakeMatched, kRealMismatched };

struct DiscriminatorBatch {
  ImageTensor image;
  LatentCode latent;
  TextEmbedding text;
  DiscriminatorLabel label = DiscriminatorLabel::kRealMatched;
};

// Single-sample score in (0, 1). Checks that the label agrees with the
// provenance of the text and that the latent is quantized.
double discriminate(const DiscriminatorBatch& batch, Discriminator& d);

struct AdversarialLoss {
  double value = 0.0;
  std::vector<double> g_fake;
  std::vector<double> g_real;
  std::vector<double> g_mismatched;
};

// -mean(D(fake)).
AdversarialLoss generator_adv_loss(std::span<const double> scores_fake);

// mean_i[-ln(1 - f_i) - ln(r_i) - ln(1 - m_i)] with scores clamped to
// [eps, 1 - eps]. An empty mismatched set drops the third term.
AdversarialLoss discriminator_loss(std::span<const double> fake,
                                   std::span<const double> real,
                                   std::span<const double> mismatched);

// Uniform cyclic permutation of 0..n-1; no index maps to itself.
std::vector<int> derangement(int n, nn::Rng& rng);

}  // namespace tsic

#endif  // TSIC_ADVERSARIAL_HPP_

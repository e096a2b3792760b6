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

#ifndef TSIC_SSA_HPP_
#define TSIC_SSA_HPP_

#include <string>
#include <vector>

#include "tsic/nn.hpp"
#include "tsic/text.hpp"

namespace tsic {

// Per-position weights in [0, 1]; [N, 1, h, w].
struct SemanticMask {
  Tensor values;
};

// Channelwise scale and shift derived from text; each [N, c, 1, 1].
struct AffineParams {
  Tensor gamma;
  Tensor beta;
};

// Semantic-spatial aware block:
//
//   out = x + mask(x) * (gamma(v) * norm(x) + beta(v))
//
// mask() is a conv(c -> c/2) / ReLU / conv(c/2 -> 1) / sigmoid stack,
// gamma() and beta() are independent 512 -> 256 -> c perceptrons with a SiLU
// between layers, and norm() is batch normalization without learned affine.
class SsaBlock {
 public:
  static constexpr int kHidden = 256;

  SsaBlock() = default;
  SsaBlock(const std::string& name, int channels, nn::Rng& rng);

  int channels() const { return channels_; }

  SemanticMask predict_mask(const Tensor& features);
  AffineParams affine_from_text(const Tensor& text);
  // features [N, c, h, w]; text [N, 512, 1, 1].
  Tensor transform(const Tensor& features, const Tensor& text, bool training);

  struct Grads {
    Tensor features;
    Tensor text;
  };
  // Backward of the most recent transform() call.
  Grads backward(const Tensor& gy);

  const SemanticMask& last_mask() const { return mask_; }

  void collect(nn::ParameterList& out);
  // Direct access for tests and initialization.
  nn::Conv2d& mask_head() { return mask_conv2_; }
  nn::Linear& gamma_layer(int i) { return i == 0 ? gamma1_ : gamma2_; }
  nn::Linear& beta_layer(int i) { return i == 0 ? beta1_ : beta2_; }

 private:
  int channels_ = 0;
  nn::Conv2d mask_conv1_;
  nn::Act mask_act_{nn::Activation::kRelu};
  nn::Conv2d mask_conv2_;
  nn::Act mask_sigmoid_{nn::Activation::kSigmoid};
  nn::Linear gamma1_, gamma2_;
  nn::Act gamma_act_{nn::Activation::kSilu};
  nn::Linear beta1_, beta2_;
  nn::Act beta_act_{nn::Activation::kSilu};
  nn::BatchNorm2d norm_;

  SemanticMask mask_;
  AffineParams affine_;
  Tensor normalized_;
  Tensor affine_out_;  // gamma * norm(x) + beta
};

// One block per generator insertion point.
class SsaStack {
 public:
  SsaStack() = default;
  SsaStack(const std::string& name, const std::vector<int>& channels,
           nn::Rng& rng);

  std::size_t size() const { return blocks_.size(); }
  SsaBlock& operator[](std::size_t i) { return blocks_[i]; }
  const SsaBlock& operator[](std::size_t i) const { return blocks_[i]; }
  void collect(nn::ParameterList& out);

 private:
  std::vector<SsaBlock> blocks_;
};

}  // namespace tsic

#endif  // TSIC_SSA_HPP_

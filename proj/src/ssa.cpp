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

#include "tsic/ssa.hpp"

#include <algorithm>
#include <stdexcept>

namespace tsic {

SsaBlock::SsaBlock(const std::string& name, int channels, nn::Rng& rng)
    : channels_(channels),
      mask_conv1_(name + ".mask.conv1", channels, std::max(1, channels / 2),
                  {3, 1, 1}, rng),
      mask_conv2_(name + ".mask.conv2", std::max(1, channels / 2), 1,
                  {3, 1, 1}, rng, 0.1),
      gamma1_(name + ".gamma.fc1", kTextDim, kHidden, rng),
      gamma2_(name + ".gamma.fc2", kHidden, channels, rng, 0.5),
      beta1_(name + ".beta.fc1", kTextDim, kHidden, rng),
      beta2_(name + ".beta.fc2", kHidden, channels, rng, 0.5),
      norm_(name + ".norm", channels) {}

SemanticMask SsaBlock::predict_mask(const Tensor& features) {
  if (features.c() != channels_) {
    throw std::invalid_argument("SSA: expected " + std::to_string(channels_) +
                                " feature channels, got " +
                                features.shape().str());
  }
  Tensor h = mask_act_.forward(mask_conv1_.forward(features));
  return {mask_sigmoid_.forward(mask_conv2_.forward(h))};
}

AffineParams SsaBlock::affine_from_text(const Tensor& text) {
  if (text.c() != kTextDim || text.h() != 1 || text.w() != 1) {
    throw std::invalid_argument("SSA: text must be [N,512,1,1], got " +
                                text.shape().str());
  }
  AffineParams p;
  p.gamma = gamma2_.forward(gamma_act_.forward(gamma1_.forward(text)));
  p.beta = beta2_.forward(beta_act_.forward(beta1_.forward(text)));
  return p;
}

Tensor SsaBlock::transform(const Tensor& features, const Tensor& text,
                           bool training) {
  if (text.n() != features.n()) {
    throw std::invalid_argument("SSA: text batch " + text.shape().str() +
                                " does not match features " +
                                features.shape().str());
  }
  mask_ = predict_mask(features);
  affine_ = affine_from_text(text);
  normalized_ = norm_.forward(features, training);

  Tensor out(features.shape());
  affine_out_ = Tensor(features.shape());
  const std::size_t plane = features.shape().plane();
  for (int n = 0; n < features.n(); ++n) {
    const double* m = mask_.values.plane(n, 0);
    for (int c = 0; c < channels_; ++c) {
      const double g = affine_.gamma.sample(n)[c];
      const double b = affine_.beta.sample(n)[c];
      const double* x = features.plane(n, c);
      const double* xn = normalized_.plane(n, c);
      double* a = affine_out_.plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        a[i] = g * xn[i] + b;
        o[i] = x[i] + m[i] * a[i];
      }
    }
  }
  return out;
}

SsaBlock::Grads SsaBlock::backward(const Tensor& gy) {
  const Shape s = gy.shape();
  const std::size_t plane = s.plane();
  Tensor g_mask({s.n, 1, s.h, s.w});
  Tensor g_norm(s);
  Tensor g_gamma({s.n, channels_, 1, 1});
  Tensor g_beta({s.n, channels_, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    const double* m = mask_.values.plane(n, 0);
    double* gm = g_mask.plane(n, 0);
    for (int c = 0; c < channels_; ++c) {
      const double g = affine_.gamma.sample(n)[c];
      const double* go = gy.plane(n, c);
      const double* a = affine_out_.plane(n, c);
      const double* xn = normalized_.plane(n, c);
      double* gn = g_norm.plane(n, c);
      double acc_g = 0.0, acc_b = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        gm[i] += go[i] * a[i];
        const double ga = go[i] * m[i];
        acc_g += ga * xn[i];
        acc_b += ga;
        gn[i] = ga * g;
      }
      g_gamma.sample(n)[c] = acc_g;
      g_beta.sample(n)[c] = acc_b;
    }
  }
  Grads out;
  out.features = gy;
  add_inplace(out.features, norm_.backward(g_norm));
  Tensor g_mask_in = mask_conv1_.backward(mask_act_.backward(
      mask_conv2_.backward(mask_sigmoid_.backward(g_mask))));
  add_inplace(out.features, g_mask_in);

  out.text = gamma1_.backward(gamma_act_.backward(gamma2_.backward(g_gamma)));
  add_inplace(out.text,
              beta1_.backward(beta_act_.backward(beta2_.backward(g_beta))));
  return out;
}

void SsaBlock::collect(nn::ParameterList& out) {
  mask_conv1_.collect(out);
  mask_conv2_.collect(out);
  gamma1_.collect(out);
  gamma2_.collect(out);
  beta1_.collect(out);
  beta2_.collect(out);
  norm_.collect(out);
}

SsaStack::SsaStack(const std::string& name, const std::vector<int>& channels,
                   nn::Rng& rng) {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    blocks_.emplace_back(name + "." + std::to_string(i), channels[i], rng);
  }
}

void SsaStack::collect(nn::ParameterList& out) {
  for (SsaBlock& b : blocks_) b.collect(out);
}

}  // namespace tsic

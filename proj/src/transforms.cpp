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

#include "tsic/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace tsic {

double round_half_away(double v) { return std::round(v); }

Tensor quantize_values(const Tensor& values, QuantizeMode mode,
                       nn::Rng* rng) {
  Tensor out(values.shape());
  const double* in = values.data();
  double* o = out.data();
  if (mode == QuantizeMode::kTrainNoise) {
    if (rng == nullptr) {
      throw std::invalid_argument("quantize: noise mode needs an rng");
    }
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (std::size_t i = 0; i < values.size(); ++i) o[i] = in[i] + u(*rng);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      o[i] = round_half_away(in[i]);
    }
  }
  return out;
}

Tensor quantize_backward(const Tensor& grad, QuantizeMode mode) {
  if (mode == QuantizeMode::kEvalRound) {
    throw std::logic_error("quantize: eval rounding is not differentiable");
  }
  return grad;
}

namespace {

template <typename Grid>
Grid quantize_grid(const Grid& code, QuantizeMode mode, nn::Rng* rng) {
  if (code.state != LatentState::kContinuous) {
    throw std::logic_error("quantize: input is already quantized");
  }
  Grid out;
  out.values = quantize_values(code.values, mode, rng);
  out.state = mode == QuantizeMode::kTrainNoise ? LatentState::kNoisy
                                                : LatentState::kQuantized;
  return out;
}

}  // namespace

LatentCode quantize(const LatentCode& code, QuantizeMode mode, nn::Rng* rng) {
  return quantize_grid(code, mode, rng);
}

HyperLatent quantize(const HyperLatent& code, QuantizeMode mode,
                     nn::Rng* rng) {
  return quantize_grid(code, mode, rng);
}

// ---------------------------------------------------------------------------

Encoder::Encoder(const EncoderConfig& cfg, nn::Rng& rng) : cfg_(cfg) {
  head_ = nn::Conv2d("encoder.head", 3, cfg.head_channels, {3, 1, 1}, rng);
  int cin = cfg.head_channels;
  for (int i = 0; i < 4; ++i) {
    const int cout = i == 3 ? cfg.latent_channels : cfg.mid_channels;
    stages_.emplace_back("encoder.down" + std::to_string(i), cin, cout,
                         ConvGeometry{3, 2, 1}, rng);
    cin = cout;
  }
  tail_ = nn::Conv2d("encoder.tail", cfg.latent_channels, cfg.latent_channels,
                     {3, 1, 1}, rng, kTailGain);
  acts_.assign(5, nn::Act(nn::Activation::kRelu));
}

Tensor Encoder::forward(const Tensor& x) {
  if (x.c() != 3 || x.h() % kLatentStride != 0 ||
      x.w() % kLatentStride != 0) {
    throw std::invalid_argument(
        "encode: input " + x.shape().str() +
        " must have 3 channels and dims that are multiples of 16 (pad first)");
  }
  Tensor h = acts_[0].forward(head_.forward(x));
  for (int i = 0; i < 4; ++i) h = acts_[i + 1].forward(stages_[i].forward(h));
  return tail_.forward(h);
}

Tensor Encoder::backward(const Tensor& gy) {
  Tensor g = tail_.backward(gy);
  for (int i = 3; i >= 0; --i) g = stages_[i].backward(acts_[i + 1].backward(g));
  return head_.backward(acts_[0].backward(g));
}

void Encoder::collect(nn::ParameterList& out) {
  head_.collect(out);
  for (auto& s : stages_) s.collect(out);
  tail_.collect(out);
}

LatentCode encode(const ImageTensor& img, Encoder& encoder) {
  return {encoder.forward(img.pixels()), LatentState::kContinuous};
}

// ---------------------------------------------------------------------------

Generator::Generator(const GeneratorConfig& cfg, nn::Rng& rng) : cfg_(cfg) {
  if (cfg.residual_blocks < 1) {
    throw std::invalid_argument("Generator: need at least one residual block");
  }
  if (cfg.up_channels.size() != 4) {
    throw std::invalid_argument("Generator: exactly four upsampling stages");
  }
  const int rc = cfg.residual_channels;
  head_ = nn::Conv2d("generator.head", cfg.latent_channels, rc, {3, 1, 1}, rng,
                     1.0);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    const std::string name = "generator.res" + std::to_string(i);
    residuals_.push_back({nn::Conv2d(name + ".conv1", rc, rc, {3, 1, 1}, rng),
                          nn::Act(nn::Activation::kRelu),
                          nn::Conv2d(name + ".conv2", rc, rc, {3, 1, 1}, rng,
                                     0.1)});
  }
  std::vector<int> ssa_channels = {rc};
  int cin = rc;
  for (int i = 0; i < 4; ++i) {
    const int cout = cfg.up_channels[i];
    ups_.emplace_back("generator.up" + std::to_string(i), cin, cout,
                      ConvGeometry{4, 2, 1}, rng);
    up_acts_.emplace_back(nn::Activation::kRelu);
    ssa_channels.push_back(cout);
    cin = cout;
  }
  tail_ = nn::Conv2d("generator.tail", cin, 3, {3, 1, 1}, rng, 1.0);
  ssa_ = SsaStack("generator.ssa", ssa_channels, rng);
}

Tensor Generator::forward(const Tensor& latent, const Tensor& text,
                          bool training) {
  if (latent.c() != cfg_.latent_channels) {
    throw std::invalid_argument(
        "generate: latent " + latent.shape().str() + " does not match " +
        std::to_string(cfg_.latent_channels) + " generator input channels");
  }
  Tensor h = head_.forward(latent);
  for (Residual& r : residuals_) {
    Tensor d = r.conv2.forward(r.act.forward(r.conv1.forward(h)));
    add_inplace(d, h);
    h = std::move(d);
  }
  h = ssa_[0].transform(h, text, training);
  for (std::size_t i = 0; i < ups_.size(); ++i) {
    h = up_acts_[i].forward(ups_[i].forward(h));
    h = ssa_[i + 1].transform(h, text, training);
  }
  return out_act_.forward(tail_.forward(h));
}

Generator::Grads Generator::backward(const Tensor& gy) {
  Tensor g = tail_.backward(out_act_.backward(gy));
  Tensor g_text;
  auto add_text = [&g_text](const Tensor& t) {
    if (g_text.empty()) {
      g_text = t;
    } else {
      add_inplace(g_text, t);
    }
  };
  for (int i = static_cast<int>(ups_.size()) - 1; i >= 0; --i) {
    SsaBlock::Grads sg = ssa_[i + 1].backward(g);
    add_text(sg.text);
    g = ups_[i].backward(up_acts_[i].backward(sg.features));
  }
  SsaBlock::Grads sg = ssa_[0].backward(g);
  add_text(sg.text);
  g = std::move(sg.features);
  for (int i = static_cast<int>(residuals_.size()) - 1; i >= 0; --i) {
    Residual& r = residuals_[i];
    Tensor gi = r.conv1.backward(r.act.backward(r.conv2.backward(g)));
    add_inplace(g, gi);
  }
  return {head_.backward(g), std::move(g_text)};
}

std::vector<Tensor> Generator::masks() const {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < ssa_.size(); ++i) {
    out.push_back(ssa_[i].last_mask().values);
  }
  return out;
}

void Generator::collect(nn::ParameterList& out) {
  head_.collect(out);
  for (Residual& r : residuals_) {
    r.conv1.collect(out);
    r.conv2.collect(out);
  }
  for (auto& u : ups_) u.collect(out);
  tail_.collect(out);
  ssa_.collect(out);
}

ImageTensor generate(const LatentCode& latent, const TextEmbedding& text,
                     Generator& generator) {
  if (!latent.quantized()) {
    throw std::invalid_argument("generate: latent must be quantized");
  }
  if (latent.values.n() != 1) {
    throw std::invalid_argument("generate: expected a single latent");
  }
  const TextEmbedding texts[] = {text};
  return ImageTensor(generator.forward(latent.values, text_batch(texts),
                                       /*training=*/false));
}

}  // namespace tsic

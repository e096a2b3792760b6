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

#ifndef TSIC_TRANSFORMS_HPP_
#define TSIC_TRANSFORMS_HPP_

#include <string>
#include <vector>

#include "tsic/image.hpp"
#include "tsic/nn.hpp"
#include "tsic/ssa.hpp"
#include "tsic/text.hpp"

namespace tsic {

// Spatial reduction of the analysis transform (four stride-2 stages).
inline constexpr int kLatentStride = 16;

enum class LatentState { kContinuous, kNoisy, kQuantized };

// Feature grid [N, C, h, w]. Quantized grids hold integer-valued floats.
struct LatentCode {
  Tensor values;
  LatentState state = LatentState::kContinuous;
  bool quantized() const { return state == LatentState::kQuantized; }
};

// Hyper-latent grid; same representation, distinct type.
struct HyperLatent {
  Tensor values;
  LatentState state = LatentState::kContinuous;
  bool quantized() const { return state == LatentState::kQuantized; }
};

enum class QuantizeMode { kTrainNoise, kTrainSte, kEvalRound };

// Round half away from zero.
double round_half_away(double v);

// kEvalRound and kTrainSte round (the straight-through backward is the
// identity, applied by the caller); kTrainNoise adds U[-0.5, 0.5) noise from
// `rng`. Quantizing an already quantized or noisy grid is an error.
LatentCode quantize(const LatentCode& code, QuantizeMode mode,
                    nn::Rng* rng = nullptr);
HyperLatent quantize(const HyperLatent& code, QuantizeMode mode,
                     nn::Rng* rng = nullptr);
Tensor quantize_values(const Tensor& values, QuantizeMode mode, nn::Rng* rng);
// Backward of quantize_values: identity for both training modes. Eval
// rounding has no training gradient and throws.
Tensor quantize_backward(const Tensor& grad, QuantizeMode mode);

struct EncoderConfig {
  int head_channels = 16;
  int mid_channels = 32;
  int latent_channels = 64;
};

// Head conv, four stride-2 conv stages and a tail conv; ReLU between
// layers, linear output.
class Encoder {
 public:
  // Initial latent spread of the tail conv. Training starts above every
  // rate target so the controller only has to pull the rate down.
  static constexpr double kTailGain = 4.0;

  Encoder() = default;
  Encoder(const EncoderConfig& cfg, nn::Rng& rng);

  const EncoderConfig& config() const { return cfg_; }
  // x: [N, 3, H, W] with H, W multiples of 16.
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void collect(nn::ParameterList& out);

 private:
  EncoderConfig cfg_;
  nn::Conv2d head_;
  std::vector<nn::Conv2d> stages_;
  nn::Conv2d tail_;
  std::vector<nn::Act> acts_;
};

LatentCode encode(const ImageTensor& img, Encoder& encoder);

struct GeneratorConfig {
  int latent_channels = 64;
  int residual_channels = 32;
  int residual_blocks = 9;
  // Output channels of the four upsampling stages.
  std::vector<int> up_channels = {32, 32, 16, 16};
};

// Head conv, N residual blocks, four 2x upsampling stages and a tanh tail.
// An SSA block follows the residual section and every upsampling stage.
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, nn::Rng& rng);

  const GeneratorConfig& config() const { return cfg_; }
  std::size_t insertion_points() const { return ssa_.size(); }
  SsaStack& ssa() { return ssa_; }

  // latent: [N, C, h, w]; text: [N, 512, 1, 1]. Returns [N, 3, 16h, 16w].
  Tensor forward(const Tensor& latent, const Tensor& text, bool training);
  struct Grads {
    Tensor latent;
    Tensor text;
  };
  Grads backward(const Tensor& gy);

  // Masks from the most recent forward, one per SSA block.
  std::vector<Tensor> masks() const;

  void collect(nn::ParameterList& out);

 private:
  struct Residual {
    nn::Conv2d conv1;
    nn::Act act{nn::Activation::kRelu};
    nn::Conv2d conv2;
  };
  GeneratorConfig cfg_;
  nn::Conv2d head_;
  std::vector<Residual> residuals_;
  std::vector<nn::ConvTranspose2d> ups_;
  std::vector<nn::Act> up_acts_;
  nn::Conv2d tail_;
  nn::Act out_act_{nn::Activation::kTanh};
  SsaStack ssa_;
};

// Reconstruction from a quantized latent under the given text.
ImageTensor generate(const LatentCode& latent, const TextEmbedding& text,
                     Generator& generator);

}  // namespace tsic

#endif  // TSIC_TRANSFORMS_HPP_

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

#ifndef TSIC_ENTROPY_HPP_
#define TSIC_ENTROPY_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "tsic/image.hpp"
#include "tsic/nn.hpp"
#include "tsic/range_coder.hpp"
#include "tsic/transforms.hpp"

namespace tsic {

inline constexpr double kSigmaMin = 1e-2;
inline constexpr double kLikelihoodFloor = 1e-9;

// Probability of the unit bin centred on `value` under N(mean, scale^2).
// scale is clamped to kSigmaMin.
double gaussian_bin_probability(double value, double mean, double scale);

// Sum of -log2 p over the given probabilities.
double information_bits(std::span<const double> probabilities);

// Bits of `values` under per-element Gaussians, optionally with gradients of
// the bit count with respect to value, mean and scale.
struct GaussianRate {
  double bits = 0.0;
  Tensor g_value;
  Tensor g_mean;
  Tensor g_scale;
};
GaussianRate gaussian_rate(const Tensor& values, const Tensor& mean,
                           const Tensor& scale, bool with_grad);

struct RateEstimate {
  double bits_y = 0.0;
  double bits_z = 0.0;
  double bpp = 0.0;  // (bits_y + bits_z) / (H * W) of the original image
};

struct HyperpriorConfig {
  int latent_channels = 64;
  int hyper_channels = 32;
};

// Mean and scale grids, each [N, C, h, w].
struct GaussianParams {
  Tensor mean;
  Tensor scale;
};

// Hyper-encoder (two stride-2 convs), hyper-decoder (two 2x transposed
// convs emitting mean and scale for y), and a per-channel Gaussian density
// for z.
class Hyperprior {
 public:
  Hyperprior() = default;
  Hyperprior(const HyperpriorConfig& cfg, nn::Rng& rng);

  const HyperpriorConfig& config() const { return cfg_; }

  Tensor analyze(const Tensor& y);
  Tensor analyze_backward(const Tensor& gz);

  // z_hat -> parameters for a latent of spatial size (h, w).
  GaussianParams synthesize(const Tensor& z_hat, int h, int w);
  // Gradient with respect to z_hat.
  Tensor synthesize_backward(const Tensor& g_mean, const Tensor& g_scale);

  // Factorized density parameters broadcast to `shape`.
  GaussianParams z_density(const Shape& shape) const;
  void z_density_backward(const Tensor& g_mean, const Tensor& g_scale);

  // Spatial size of z for a latent of size (h, w).
  static int hyper_size(int latent_size);

  void collect(nn::ParameterList& out);

 private:
  HyperpriorConfig cfg_;
  nn::Conv2d enc1_, enc2_;
  nn::Act enc_act_{nn::Activation::kRelu};
  nn::ConvTranspose2d dec1_, dec2_;
  nn::Act dec_act_{nn::Activation::kRelu};
  nn::Parameter z_mean_;
  nn::Parameter z_scale_raw_;
  Shape dec_out_shape_;
  Tensor scale_raw_;
};

RateEstimate estimate_rate(const LatentCode& y_hat, const HyperLatent& z_hat,
                           Hyperprior& hyperprior, ImageDims dims);

// Per-position mean over channels of -log2 p(y_hat | z_hat); [h, w] as a
// [1, 1, h, w] tensor.
Tensor bit_allocation_map(const LatentCode& y_hat, const HyperLatent& z_hat,
                          Hyperprior& hyperprior);

// Escape-capable symbol coding of integer values under Gaussians. Values
// within the table's support are coded directly; others code an escape
// symbol followed by an Exp-Golomb offset in equiprobable bits.
EncodedPayload encode_gaussian(std::span<const double> values,
                               std::span<const double> means,
                               std::span<const double> scales);
std::vector<double> decode_gaussian(std::span<const std::uint8_t> payload,
                                    std::uint32_t checksum,
                                    std::span<const double> means,
                                    std::span<const double> scales);

// Bitstream layout (little-endian):
//   "TSIC" | version u8 | H u32 | W u32 | model-id u16 |
//   len_z u32 | payload_z | checksum_z u32 | len_y u32 | payload_y |
//   checksum_y u32
struct CompressedObject {
  static constexpr std::uint8_t kVersion = 1;
  std::uint8_t version = kVersion;
  ImageDims dims;  // original (unpadded) size
  std::uint16_t model_id = 0;
  std::vector<std::uint8_t> payload_z;
  std::uint32_t checksum_z = 0;
  std::vector<std::uint8_t> payload_y;
  std::uint32_t checksum_y = 0;

  std::vector<std::uint8_t> serialize() const;
  static CompressedObject parse(std::span<const std::uint8_t> bytes);
  std::size_t byte_size() const;
  // Payload bits per original pixel.
  double bpp() const;
};

// Bytes of the layout outside the two payloads.
inline constexpr std::size_t kContainerOverheadBytes = 31;

CompressedObject compress(const ImageTensor& img, Encoder& encoder,
                          Hyperprior& hyperprior, std::uint16_t model_id);

struct DecodedLatents {
  LatentCode y_hat;
  HyperLatent z_hat;
};
DecodedLatents decompress_latents(const CompressedObject& obj,
                                  Hyperprior& hyperprior);

}  // namespace tsic

#endif  // TSIC_ENTROPY_HPP_

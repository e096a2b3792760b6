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

#include "tsic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tsic {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
// Gaussian support coded directly: centre +/- ceil(kTailSigmas * scale).
constexpr double kTailSigmas = 8.0;
constexpr int kMaxHalfWidth = 255;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

struct BinTerms {
  double p;
  double dp_dvalue;
  double dp_dscale;
};

// Evaluated on |value - mean| so both tails use the accurate erfc branch.
BinTerms bin_terms(double value, double mean, double scale) {
  const double s = std::max(scale, kSigmaMin);
  const double d = value - mean;
  const double t = std::abs(d);
  const double a = (0.5 - t) / s;
  const double b = (-0.5 - t) / s;
  const double p = normal_cdf(a) - normal_cdf(b);
  const double pa = normal_pdf(a);
  const double pb = normal_pdf(b);
  const double dp_dt = (pb - pa) / s;
  const double sign = d >= 0 ? 1.0 : -1.0;
  const double dp_ds = scale < kSigmaMin ? 0.0 : (-a * pa + b * pb) / s;
  return {p, sign * dp_dt, dp_ds};
}

}  // namespace

double gaussian_bin_probability(double value, double mean, double scale) {
  return bin_terms(value, mean, scale).p;
}

double information_bits(std::span<const double> probabilities) {
  double bits = 0.0;
  for (double p : probabilities) bits -= std::log2(p);
  return bits;
}

GaussianRate gaussian_rate(const Tensor& values, const Tensor& mean,
                           const Tensor& scale, bool with_grad) {
  require_shape(mean, values.shape(), "gaussian_rate mean");
  require_shape(scale, values.shape(), "gaussian_rate scale");
  GaussianRate r;
  if (with_grad) {
    r.g_value = Tensor(values.shape());
    r.g_mean = Tensor(values.shape());
    r.g_scale = Tensor(values.shape());
  }
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const BinTerms b = bin_terms(values[i], mean[i], scale[i]);
    const double p = std::max(b.p, kLikelihoodFloor);
    r.bits -= std::log2(p);
    if (with_grad) {
      const double k = -inv_ln2 / p;
      r.g_value[i] = k * b.dp_dvalue;
      r.g_mean[i] = -k * b.dp_dvalue;
      r.g_scale[i] = k * b.dp_dscale;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

Hyperprior::Hyperprior(const HyperpriorConfig& cfg, nn::Rng& rng)
    : cfg_(cfg),
      enc1_("hyper.enc1", cfg.latent_channels, cfg.hyper_channels, {3, 2, 1},
            rng),
      enc2_("hyper.enc2", cfg.hyper_channels, cfg.hyper_channels, {3, 2, 1},
            rng, 1.0),
      dec1_("hyper.dec1", cfg.hyper_channels, cfg.hyper_channels, {4, 2, 1},
            rng),
      dec2_("hyper.dec2", cfg.hyper_channels, 2 * cfg.latent_channels,
            {4, 2, 1}, rng, 1.0),
      z_mean_("hyper.z_density.mean", {cfg.hyper_channels, 1, 1, 1}),
      z_scale_raw_("hyper.z_density.scale_raw",
                   {cfg.hyper_channels, 1, 1, 1}) {
  // softplus(0.5413) ~= 1
  z_scale_raw_.value.fill(0.5413);
}

int Hyperprior::hyper_size(int latent_size) {
  return conv_out_size(conv_out_size(latent_size, {3, 2, 1}), {3, 2, 1});
}

Tensor Hyperprior::analyze(const Tensor& y) {
  return enc2_.forward(enc_act_.forward(enc1_.forward(y)));
}

Tensor Hyperprior::analyze_backward(const Tensor& gz) {
  return enc1_.backward(enc_act_.backward(enc2_.backward(gz)));
}

GaussianParams Hyperprior::synthesize(const Tensor& z_hat, int h, int w) {
  Tensor raw = dec2_.forward(dec_act_.forward(dec1_.forward(z_hat)));
  dec_out_shape_ = raw.shape();
  raw = nn::crop(raw, h, w);
  const int c = cfg_.latent_channels;
  GaussianParams p{Tensor({raw.n(), c, h, w}), Tensor({raw.n(), c, h, w})};
  scale_raw_ = Tensor({raw.n(), c, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int n = 0; n < raw.n(); ++n) {
    std::memcpy(p.mean.sample(n), raw.sample(n), sizeof(double) * c * plane);
    const double* src = raw.sample(n) + c * plane;
    double* dst = p.scale.sample(n);
    double* keep = scale_raw_.sample(n);
    for (std::size_t i = 0; i < c * plane; ++i) {
      keep[i] = src[i];
      dst[i] = kSigmaMin + nn::softplus(src[i]);
    }
  }
  return p;
}

Tensor Hyperprior::synthesize_backward(const Tensor& g_mean,
                                       const Tensor& g_scale) {
  const Shape s = g_mean.shape();
  const int c = cfg_.latent_channels;
  Tensor g_raw({s.n, 2 * c, s.h, s.w});
  const std::size_t count = static_cast<std::size_t>(c) * s.h * s.w;
  for (int n = 0; n < s.n; ++n) {
    std::memcpy(g_raw.sample(n), g_mean.sample(n), sizeof(double) * count);
    const double* gs = g_scale.sample(n);
    const double* raw = scale_raw_.sample(n);
    double* dst = g_raw.sample(n) + count;
    for (std::size_t i = 0; i < count; ++i) dst[i] = gs[i] * nn::sigmoid(raw[i]);
  }
  Tensor g = nn::crop_backward(g_raw, dec_out_shape_);
  return dec1_.backward(dec_act_.backward(dec2_.backward(g)));
}

GaussianParams Hyperprior::z_density(const Shape& shape) const {
  if (shape.c != cfg_.hyper_channels) {
    throw std::invalid_argument("z_density: channel mismatch");
  }
  GaussianParams p{Tensor(shape), Tensor(shape)};
  for (int n = 0; n < shape.n; ++n) {
    for (int c = 0; c < shape.c; ++c) {
      const double m = z_mean_.value[c];
      const double sc = kSigmaMin + nn::softplus(z_scale_raw_.value[c]);
      double* pm = p.mean.plane(n, c);
      double* ps = p.scale.plane(n, c);
      for (std::size_t i = 0; i < shape.plane(); ++i) {
        pm[i] = m;
        ps[i] = sc;
      }
    }
  }
  return p;
}

void Hyperprior::z_density_backward(const Tensor& g_mean,
                                    const Tensor& g_scale) {
  const Shape s = g_mean.shape();
  for (int c = 0; c < s.c; ++c) {
    double gm = 0.0, gs = 0.0;
    for (int n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gm += g_mean.plane(n, c)[i];
        gs += g_scale.plane(n, c)[i];
      }
    }
    z_mean_.grad[c] += gm;
    z_scale_raw_.grad[c] += gs * nn::sigmoid(z_scale_raw_.value[c]);
  }
}

void Hyperprior::collect(nn::ParameterList& out) {
  enc1_.collect(out);
  enc2_.collect(out);
  dec1_.collect(out);
  dec2_.collect(out);
  out.params.push_back(&z_mean_);
  out.params.push_back(&z_scale_raw_);
}

RateEstimate estimate_rate(const LatentCode& y_hat, const HyperLatent& z_hat,
                           Hyperprior& hyperprior, ImageDims dims) {
  if (y_hat.state == LatentState::kContinuous ||
      z_hat.state == LatentState::kContinuous) {
    throw std::invalid_argument("estimate_rate: inputs must be quantized");
  }
  const GaussianParams py =
      hyperprior.synthesize(z_hat.values, y_hat.values.h(), y_hat.values.w());
  const GaussianParams pz = hyperprior.z_density(z_hat.values.shape());
  RateEstimate r;
  r.bits_y = gaussian_rate(y_hat.values, py.mean, py.scale, false).bits;
  r.bits_z = gaussian_rate(z_hat.values, pz.mean, pz.scale, false).bits;
  r.bpp = (r.bits_y + r.bits_z) /
          (static_cast<double>(dims.height) * dims.width);
  return r;
}

Tensor bit_allocation_map(const LatentCode& y_hat, const HyperLatent& z_hat,
                          Hyperprior& hyperprior) {
  const Tensor& y = y_hat.values;
  if (y.n() != 1) throw std::invalid_argument("bit_allocation_map: N != 1");
  const GaussianParams p = hyperprior.synthesize(z_hat.values, y.h(), y.w());
  Tensor map({1, 1, y.h(), y.w()});
  for (int c = 0; c < y.c(); ++c) {
    for (int i = 0; i < y.h() * y.w(); ++i) {
      const double v = y.plane(0, c)[i];
      const double pr =
          std::max(gaussian_bin_probability(v, p.mean.plane(0, c)[i],
                                            p.scale.plane(0, c)[i]),
                   kLikelihoodFloor);
      map[i] -= std::log2(pr);
    }
  }
  scale_inplace(map, 1.0 / y.c());
  return map;
}

// ---------------------------------------------------------------------------

namespace {

struct SymbolLayout {
  long centre;
  int half_width;
  int escape() const { return 2 * half_width + 1; }
};

SymbolLayout layout_for(double mean, double scale) {
  const double s = std::max(scale, kSigmaMin);
  const int k = static_cast<int>(std::clamp(std::ceil(kTailSigmas * s), 1.0,
                                            static_cast<double>(kMaxHalfWidth)));
  return {std::lround(mean), k};
}

FrequencyTable table_for(const SymbolLayout& lay, double mean, double scale) {
  std::vector<double> pmf(lay.escape() + 1);
  double mass = 0.0;
  for (int j = 0; j < lay.escape(); ++j) {
    pmf[j] = gaussian_bin_probability(
        static_cast<double>(lay.centre - lay.half_width + j), mean, scale);
    mass += pmf[j];
  }
  pmf[lay.escape()] = std::max(0.0, 1.0 - mass);
  return FrequencyTable::from_pmf(pmf);
}

void encode_escape(RangeEncoder& enc, long offset, int half_width) {
  enc.encode_bits(offset < 0 ? 1u : 0u, 1);
  const std::uint64_t v =
      static_cast<std::uint64_t>(std::labs(offset) - half_width - 1) + 1;
  int nbits = 0;
  while ((v >> (nbits + 1)) != 0) ++nbits;
  for (int i = 0; i < nbits; ++i) enc.encode_bits(1, 1);
  enc.encode_bits(0, 1);
  for (int i = nbits - 1; i >= 0; --i) {
    enc.encode_bits(static_cast<std::uint32_t>((v >> i) & 1u), 1);
  }
}

long decode_escape(RangeDecoder& dec, int half_width) {
  const bool negative = dec.decode_bits(1) != 0;
  int nbits = 0;
  while (dec.decode_bits(1) != 0) {
    if (++nbits > 62) throw CodingError("escape code too long");
  }
  std::uint64_t v = 1;
  for (int i = 0; i < nbits; ++i) v = (v << 1) | dec.decode_bits(1);
  const long mag = static_cast<long>(v - 1) + half_width + 1;
  return negative ? -mag : mag;
}

}  // namespace

EncodedPayload encode_gaussian(std::span<const double> values,
                               std::span<const double> means,
                               std::span<const double> scales) {
  if (means.size() != values.size() || scales.size() != values.size()) {
    throw std::invalid_argument("encode_gaussian: length mismatch");
  }
  std::vector<std::int32_t> symbols(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] != std::round(values[i]) ||
        std::abs(values[i]) > 1e9) {
      throw std::invalid_argument("encode_gaussian: value " +
                                  std::to_string(values[i]) +
                                  " is not a codable integer");
    }
    symbols[i] = static_cast<std::int32_t>(values[i]);
  }
  RangeEncoder enc;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SymbolLayout lay = layout_for(means[i], scales[i]);
    const FrequencyTable t = table_for(lay, means[i], scales[i]);
    const long offset = symbols[i] - lay.centre;
    if (std::labs(offset) <= lay.half_width) {
      enc.encode(t, static_cast<int>(offset + lay.half_width));
    } else {
      enc.encode(t, lay.escape());
      encode_escape(enc, offset, lay.half_width);
    }
  }
  return {enc.finish(), symbol_checksum(symbols)};
}

std::vector<double> decode_gaussian(std::span<const std::uint8_t> payload,
                                    std::uint32_t checksum,
                                    std::span<const double> means,
                                    std::span<const double> scales) {
  if (means.size() != scales.size()) {
    throw std::invalid_argument("decode_gaussian: length mismatch");
  }
  RangeDecoder dec(payload);
  std::vector<std::int32_t> symbols(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    const SymbolLayout lay = layout_for(means[i], scales[i]);
    const FrequencyTable t = table_for(lay, means[i], scales[i]);
    const int s = dec.decode(t);
    long offset = s == lay.escape() ? decode_escape(dec, lay.half_width)
                                    : s - lay.half_width;
    symbols[i] = static_cast<std::int32_t>(lay.centre + offset);
  }
  dec.finish();
  if (symbol_checksum(symbols) != checksum) {
    throw CodingError("latent payload checksum mismatch");
  }
  return {symbols.begin(), symbols.end()};
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'T', 'S', 'I', 'C'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >>
                                             (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw CodingError("bitstream truncated");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::vector<std::uint8_t> CompressedObject::serialize() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(byte_size());
  put_le<std::uint8_t>(out, version);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.height));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.width));
  put_le<std::uint16_t>(out, model_id);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload_z.size()));
  out.insert(out.end(), payload_z.begin(), payload_z.end());
  put_le<std::uint32_t>(out, checksum_z);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload_y.size()));
  out.insert(out.end(), payload_y.begin(), payload_y.end());
  put_le<std::uint32_t>(out, checksum_y);
  return out;
}

CompressedObject CompressedObject::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CodingError("bitstream: bad magic (expected TSIC)");
  }
  std::size_t pos = 4;
  CompressedObject obj;
  obj.version = get_le<std::uint8_t>(bytes, pos);
  if (obj.version != kVersion) {
    throw CodingError("bitstream: unsupported version " +
                      std::to_string(obj.version));
  }
  obj.dims.height = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  obj.dims.width = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  obj.model_id = get_le<std::uint16_t>(bytes, pos);
  const auto len_z = get_le<std::uint32_t>(bytes, pos);
  if (pos + len_z > bytes.size()) throw CodingError("bitstream truncated");
  obj.payload_z.assign(bytes.begin() + pos, bytes.begin() + pos + len_z);
  pos += len_z;
  obj.checksum_z = get_le<std::uint32_t>(bytes, pos);
  const auto len_y = get_le<std::uint32_t>(bytes, pos);
  if (pos + len_y > bytes.size()) throw CodingError("bitstream truncated");
  obj.payload_y.assign(bytes.begin() + pos, bytes.begin() + pos + len_y);
  pos += len_y;
  obj.checksum_y = get_le<std::uint32_t>(bytes, pos);
  if (pos != bytes.size()) {
    throw CodingError("bitstream: trailing bytes after payload");
  }
  if (obj.dims.height < kMinImageSide || obj.dims.width < kMinImageSide) {
    throw CodingError("bitstream: implausible image size");
  }
  return obj;
}

std::size_t CompressedObject::byte_size() const {
  return kContainerOverheadBytes + payload_z.size() + payload_y.size();
}

double CompressedObject::bpp() const {
  return 8.0 * static_cast<double>(payload_z.size() + payload_y.size()) /
         (static_cast<double>(dims.height) * dims.width);
}

CompressedObject compress(const ImageTensor& img, Encoder& encoder,
                          Hyperprior& hyperprior, std::uint16_t model_id) {
  const PaddedImage padded = pad_to_multiple(img, kLatentStride);
  const Tensor y = encoder.forward(padded.image.pixels());
  const Tensor y_hat = quantize_values(y, QuantizeMode::kEvalRound, nullptr);
  const Tensor z = hyperprior.analyze(y);
  const Tensor z_hat = quantize_values(z, QuantizeMode::kEvalRound, nullptr);

  CompressedObject obj;
  obj.dims = padded.original;
  obj.model_id = model_id;
  const GaussianParams pz = hyperprior.z_density(z_hat.shape());
  EncodedPayload ez =
      encode_gaussian(z_hat.values(), pz.mean.values(), pz.scale.values());
  const GaussianParams py = hyperprior.synthesize(z_hat, y.h(), y.w());
  EncodedPayload ey =
      encode_gaussian(y_hat.values(), py.mean.values(), py.scale.values());
  obj.payload_z = std::move(ez.bytes);
  obj.checksum_z = ez.checksum;
  obj.payload_y = std::move(ey.bytes);
  obj.checksum_y = ey.checksum;
  return obj;
}

DecodedLatents decompress_latents(const CompressedObject& obj,
                                  Hyperprior& hyperprior) {
  const int h = (obj.dims.height + kLatentStride - 1) / kLatentStride;
  const int w = (obj.dims.width + kLatentStride - 1) / kLatentStride;
  const HyperpriorConfig& cfg = hyperprior.config();
  const Shape z_shape{1, cfg.hyper_channels, Hyperprior::hyper_size(h),
                      Hyperprior::hyper_size(w)};
  const GaussianParams pz = hyperprior.z_density(z_shape);
  DecodedLatents out;
  out.z_hat.values =
      Tensor(z_shape, decode_gaussian(obj.payload_z, obj.checksum_z,
                                      pz.mean.values(), pz.scale.values()));
  out.z_hat.state = LatentState::kQuantized;
  const GaussianParams py = hyperprior.synthesize(out.z_hat.values, h, w);
  out.y_hat.values = Tensor(
      {1, cfg.latent_channels, h, w},
      decode_gaussian(obj.payload_y, obj.checksum_y, py.mean.values(),
                      py.scale.values()));
  out.y_hat.state = LatentState::kQuantized;
  return out;
}

}  // namespace tsic

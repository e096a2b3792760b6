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


#include "tsic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "tsic/container.hpp"
#include "tsic/image_io.hpp"
#include "tsic/perceptual.hpp"

namespace tsic {

namespace fs = std::filesystem;

double mean_squared_error(const ImageTensor& a, const ImageTensor& b) {
  if (a.dims() != b.dims()) {
    throw std::invalid_argument("mse: image dims differ");
  }
  const Tensor& x = a.pixels();
  const Tensor& y = b.pixels();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (x[i] - y[i]) * (x[i] - y[i]);
  }
  return acc / static_cast<double>(x.size());
}

double psnr_db(double mse) {
  if (mse < 0 || !std::isfinite(mse)) {
    throw std::invalid_argument("psnr: mse must be finite and >= 0");
  }
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(4.0 / mse);
}

nlohmann::json RdPoint::to_json() const {
  nlohmann::json j = {{"bpp", bpp},
                      {"psnr_db", psnr_db},
                      {"mse", mse},
                      {"perc_proxy", perc_proxy},
                      {"image_id", image_id},
                      {"variant", variant},
                      {"caption_id", caption_id},
                      {"caption", caption}};
  j["distributional"] =
      distributional ? nlohmann::json(*distributional) : nlohmann::json();
  return j;
}

RdCurve RdCurve::make(std::vector<double> bpp, std::vector<double> quality) {
  if (bpp.size() != quality.size()) {
    throw std::invalid_argument("RD curve: bpp and quality lengths differ");
  }
  if (bpp.size() < 2) {
    throw std::invalid_argument("RD curve: need at least two points");
  }
  for (std::size_t i = 0; i < bpp.size(); ++i) {
    if (!(bpp[i] > 0) || !std::isfinite(bpp[i]) ||
        !std::isfinite(quality[i])) {
      throw std::invalid_argument("RD curve: points must be finite, bpp > 0");
    }
    if (i > 0 && !(bpp[i] > bpp[i - 1])) {
      throw std::invalid_argument("RD curve: bpp must be strictly increasing");
    }
  }
  return {std::move(bpp), std::move(quality)};
}

nlohmann::json RdCurve::to_json() const {
  return {{"bpp", bpp}, {"quality", quality}};
}

std::pair<double, double> mean_rate_quality(const std::vector<RdPoint>& points,
                                            QualityAxis axis) {
  if (points.empty()) {
    throw std::invalid_argument("RD mean: no records");
  }
  double r = 0.0, q = 0.0;
  for (const RdPoint& p : points) {
    r += p.bpp;
    q += axis == QualityAxis::kPerceptual ? -p.perc_proxy : p.psnr_db;
  }
  const double n = static_cast<double>(points.size());
  return {r / n, q / n};
}

namespace {

// Monotone cubic Hermite interpolant of y(x), x strictly increasing.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)), d_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] > 0) {
        const double w1 = 2 * h[k] + h[k - 1];
        const double w2 = h[k] + 2 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double operator()(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    k = std::min(k, x_.size() - 2);
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] +
           (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * d_[k + 1];
  }

  // Exact integral over [a, b]: two-point Gauss-Legendre per knot interval
  // is exact for cubics.
  double integrate(double a, double b) const {
    std::vector<double> cuts = {a};
    for (double xi : x_) {
      if (xi > a && xi < b) cuts.push_back(xi);
    }
    cuts.push_back(b);
    const double g = 1.0 / std::sqrt(3.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double m = 0.5 * (cuts[i] + cuts[i + 1]);
      const double r = 0.5 * (cuts[i + 1] - cuts[i]);
      total += r * ((*this)(m - r * g) + (*this)(m + r * g));
    }
    return total;
  }

  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0) {
      d = 0.0;
    } else if (d0 * d1 < 0 && std::abs(d) > std::abs(3 * d0)) {
      d = 3 * d0;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

Pchip log_rate_vs_quality(const RdCurve& c, const char* which) {
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&c](std::size_t a, std::size_t b) {
    return c.quality[a] < c.quality[b];
  });
  std::vector<double> q, r;
  for (std::size_t i : order) {
    if (!q.empty() && !(c.quality[i] > q.back())) {
      throw std::invalid_argument(std::string("BD-rate: ") + which +
                                  " curve repeats a quality value");
    }
    q.push_back(c.quality[i]);
    r.push_back(std::log(c.bpp[i]));
  }
  return Pchip(std::move(q), std::move(r));
}

}  // namespace

double bd_rate(const RdCurve& baseline, const RdCurve& test) {
  RdCurve::make(baseline.bpp, baseline.quality);
  RdCurve::make(test.bpp, test.quality);
  const Pchip fa = log_rate_vs_quality(baseline, "baseline");
  const Pchip fb = log_rate_vs_quality(test, "test");
  const double lo = std::max(fa.lo(), fb.lo());
  const double hi = std::min(fa.hi(), fb.hi());
  if (!(hi > lo)) {
    throw std::invalid_argument(
        "BD-rate: the curves' quality ranges do not overlap");
  }
  const double mean_diff =
      (fb.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo);
  return 100.0 * (std::exp(mean_diff) - 1.0);
}

// ---------------------------------------------------------------------------

CompressedObject compress_image(CodecModel& model, const ImageTensor& image) {
  return compress(image, model.encoder(), model.hyperprior(), model.model_id());
}

Reconstruction decompress_image(CodecModel& model, const CompressedObject& obj,
                                const TextEmbedding& text) {
  const std::uint16_t id = model.model_id();
  if (obj.model_id != id) {
    throw CodingError("bitstream was written by model id " +
                      std::to_string(obj.model_id) + " but the checkpoint is " +
                      std::to_string(id));
  }
  DecodedLatents latents = decompress_latents(obj, model.hyperprior());
  const ImageTensor full = generate(latents.y_hat, text, model.generator());
  return {crop_to(full, obj.dims), std::move(latents)};
}

std::vector<EvalImage> load_eval_images(const DatasetManifest& manifest) {
  std::vector<EvalImage> out;
  for (const ManifestRecord& r : manifest.records) {
    out.push_back({r.image, normalize_image(read_image(r.resolved)),
                   r.captions});
  }
  return out;
}

namespace {

double file_bpp(const CompressedObject& obj) {
  const std::size_t bytes = obj.serialize().size();
  return 8.0 * static_cast<double>(bytes - kContainerOverheadBytes) /
         (static_cast<double>(obj.dims.height) * obj.dims.width);
}

RdPoint score(const ImageTensor& original, const ImageTensor& decoded,
              double bpp) {
  static const MsSsimProxy proxy;
  RdPoint p;
  p.bpp = bpp;
  p.mse = mean_squared_error(original, decoded);
  p.psnr_db = psnr_db(p.mse);
  p.perc_proxy =
      proxy.evaluate(original.pixels(), decoded.pixels(), false).mean;
  return p;
}

}  // namespace

std::vector<RdPoint> evaluate(const std::vector<EvalImage>& images,
                              CodecModel& model, int caption_index) {
  if (images.empty()) {
    throw std::invalid_argument("evaluate: no images to evaluate");
  }
  const Variant variant = model.config().variant;
  std::vector<RdPoint> out;
  for (const EvalImage& img : images) {
    if (caption_index < 0 ||
        caption_index >= static_cast<int>(img.captions.size())) {
      throw std::invalid_argument("evaluate: image " + img.id + " has no caption " +
                                  std::to_string(caption_index));
    }
    const std::string& caption = img.captions[caption_index];
    const CompressedObject obj = compress_image(model, img.image);
    const TextEmbedding text = inference_text(
        variant, embed_text(caption, model.text_adapter()));
    const Reconstruction rec = decompress_image(model, obj, text);
    RdPoint p = score(img.image, rec.image, file_bpp(obj));
    p.image_id = img.id;
    p.variant = to_string(variant);
    p.caption_id = caption_index;
    p.caption = caption;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RdPoint> stability_protocol(
    CodecModel& model, const EvalImage& image,
    const std::vector<std::string>& captions) {
  if (captions.size() < 2) {
    throw std::invalid_argument("stability: need at least two captions");
  }
  const Variant variant = model.config().variant;
  const CompressedObject obj = compress_image(model, image.image);
  const double bpp = file_bpp(obj);
  std::vector<RdPoint> rows;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const TextEmbedding text = inference_text(
        variant, embed_text(captions[i], model.text_adapter()));
    const Reconstruction rec = decompress_image(model, obj, text);
    RdPoint p = score(image.image, rec.image, bpp);
    p.image_id = image.id;
    p.variant = to_string(variant);
    p.caption_id = static_cast<int>(i);
    p.caption = captions[i];
    rows.push_back(std::move(p));
  }
  return rows;
}

nlohmann::json StabilityRow::to_json() const {
  return {{"label", label},   {"matched", matched},
          {"bpp", bpp},       {"psnr_db", psnr_db},
          {"mse", mse},       {"perc_proxy", perc_proxy}};
}

std::vector<StabilityRow> stability_table(CodecModel& model,
                                          const std::vector<EvalImage>& images,
                                          std::vector<RdPoint>* per_image) {
  const std::size_t n = images.size();
  if (n < 2) {
    throw std::invalid_argument(
        "stability: need at least two images to draw mismatched captions");
  }
  std::size_t k = images[0].captions.size();
  for (const EvalImage& img : images) k = std::min(k, img.captions.size());
  std::vector<StabilityRow> rows(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> caps(images[i].captions.begin(),
                                  images[i].captions.begin() + k);
    caps.push_back(images[(i + n / 2) % n].captions[0]);
    const std::vector<RdPoint> pts = stability_protocol(model, images[i], caps);
    for (std::size_t r = 0; r <= k; ++r) {
      rows[r].bpp += pts[r].bpp / n;
      rows[r].psnr_db += pts[r].psnr_db / n;
      rows[r].mse += pts[r].mse / n;
      rows[r].perc_proxy += pts[r].perc_proxy / n;
    }
    if (per_image) per_image->insert(per_image->end(), pts.begin(), pts.end());
  }
  for (std::size_t r = 0; r <= k; ++r) {
    rows[r].matched = r < k;
    rows[r].label = r < k ? "caption " + std::to_string(r + 1) : "mismatched";
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

void write_raw(const fs::path& path, const Tensor& t) {
  std::string bytes(t.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), t.data(), bytes.size());
  write_file_atomic(path, bytes);
}

RawImage gray_png(const Tensor& plane) {
  RawImage img{plane.h(), plane.w(), 1, {}};
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const double v = std::clamp(plane[i], 0.0, 1.0);
    img.data.push_back(static_cast<std::uint8_t>(std::lround(255.0 * v)));
  }
  return img;
}

// Blue through white to red around the map mean, scaled by the largest
// deviation.
RawImage diverging_png(const Tensor& plane) {
  const double mean = sum(plane) / static_cast<double>(plane.size());
  double span = 0.0;
  for (double v : plane.values()) span = std::max(span, std::abs(v - mean));
  const double lo[3] = {59, 76, 192}, mid[3] = {221, 221, 221},
               hi[3] = {180, 4, 38};
  RawImage img{plane.h(), plane.w(), 3, {}};
  for (double v : plane.values()) {
    const double t = span > 0 ? (v - mean) / span : 0.0;
    const double* end = t < 0 ? lo : hi;
    const double a = std::abs(t);
    for (int c = 0; c < 3; ++c) {
      img.data.push_back(
          static_cast<std::uint8_t>(std::lround(mid[c] + a * (end[c] - mid[c]))));
    }
  }
  return img;
}

}  // namespace

MapsResult emit_maps(CodecModel& model, const ImageTensor& image,
                     const TextEmbedding& text, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const CompressedObject obj = compress_image(model, image);
  const Reconstruction rec = decompress_image(model, obj, text);
  MapsResult out;
  nlohmann::json index;
  const std::vector<Tensor> masks = model.generator().masks();
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const std::string stem = "mask_" + std::to_string(k);
    const fs::path png = out_dir / (stem + ".png");
    write_png(png, gray_png(masks[k]));
    write_raw(out_dir / (stem + ".f64"), masks[k]);
    out.mask_files.push_back(png);
    index["masks"].push_back(
        {{"png", png.filename().string()},
         {"raw", stem + ".f64"},
         {"shape", {masks[k].h(), masks[k].w()}}});
  }
  out.bit_map = bit_allocation_map(rec.latents.y_hat, rec.latents.z_hat,
                                   model.hyperprior());
  out.bits_y = estimate_rate(rec.latents.y_hat, rec.latents.z_hat,
                             model.hyperprior(), obj.dims)
                   .bits_y;
  out.latent_channels = rec.latents.y_hat.values.c();
  out.bit_map_file = out_dir / "bit_allocation.png";
  write_png(out.bit_map_file, diverging_png(out.bit_map));
  write_raw(out_dir / "bit_allocation.f64", out.bit_map);
  write_png(out_dir / "reconstruction.png", denormalize_image(rec.image));
  index["bit_allocation"] = {
      {"png", "bit_allocation.png"},
      {"raw", "bit_allocation.f64"},
      {"shape", {out.bit_map.h(), out.bit_map.w()}},
      {"latent_channels", out.latent_channels},
      {"bits_y", out.bits_y}};
  index["raw_format"] = "float64 little-endian, row-major";
  write_file_atomic(out_dir / "maps.json", index.dump(2) + "\n");
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<RdPoint>& points) {
  std::string s;
  for (const RdPoint& p : points) s += p.to_json().dump() + "\n";
  write_file_atomic(path, s);
}

}  // namespace tsic

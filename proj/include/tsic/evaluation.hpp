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


#ifndef TSIC_EVALUATION_HPP_
#define TSIC_EVALUATION_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsic/entropy.hpp"
#include "tsic/image.hpp"
#include "tsic/text.hpp"
#include "tsic/training.hpp"

namespace tsic {

// Reported in place of +inf when the images are identical.
inline constexpr double kPsnrIdentical = 999.0;

double mean_squared_error(const ImageTensor& a, const ImageTensor& b);
// 10 log10(4 / mse) for the [-1, 1] range.
double psnr_db(double mse);

struct RdPoint {
  double bpp = 0.0;
  double psnr_db = 0.0;
  double mse = 0.0;
  double perc_proxy = 0.0;
  std::optional<double> distributional;
  std::string image_id;
  std::string variant;
  int caption_id = -1;  // -1: decoded without text
  std::string caption;

  nlohmann::json to_json() const;
};

// Mean bpp and mean quality per operating point, bpp strictly increasing.
struct RdCurve {
  std::vector<double> bpp;
  std::vector<double> quality;

  static RdCurve make(std::vector<double> bpp, std::vector<double> quality);
  std::size_t size() const { return bpp.size(); }
  nlohmann::json to_json() const;
};

enum class QualityAxis { kPerceptual, kPsnr };
// Averages a set of per-image records; perceptual quality is -perc_proxy
// so that larger is better on both axes.
std::pair<double, double> mean_rate_quality(const std::vector<RdPoint>& points,
                                            QualityAxis axis);

// Percentage rate change of `test` relative to `baseline` at equal
// quality. Log-rate is fitted against quality with monotone piecewise
// cubic Hermite interpolation (linear for two points) and averaged over the
// overlapping quality interval.
double bd_rate(const RdCurve& baseline, const RdCurve& test);

// Encoder-side pipeline: pads, encodes and entropy codes. Text plays no
// part.
CompressedObject compress_image(CodecModel& model, const ImageTensor& image);

struct Reconstruction {
  ImageTensor image;  // cropped to the original size
  DecodedLatents latents;
};

// Decodes with the given generator-side text, used as is. Throws when the
// bitstream was produced by a different model.
Reconstruction decompress_image(CodecModel& model, const CompressedObject& obj,
                                const TextEmbedding& text);

struct EvalImage {
  std::string id;
  ImageTensor image;
  std::vector<std::string> captions;
};

std::vector<EvalImage> load_eval_images(const DatasetManifest& manifest);

// One record per image, decoded with caption `caption_index` routed through
// the model's variant.
std::vector<RdPoint> evaluate(const std::vector<EvalImage>& images,
                              CodecModel& model, int caption_index = 0);

// Compresses once and decodes once per caption, in caption order. Needs at
// least two captions.
std::vector<RdPoint> stability_protocol(CodecModel& model,
                                        const EvalImage& image,
                                        const std::vector<std::string>& captions);

// Stability table over a set of images: one row per matched caption index
// and a final row decoded with a caption of another image (index i + n/2).
struct StabilityRow {
  std::string label;  // "caption 1".."caption k", "mismatched"
  bool matched = true;
  double bpp = 0.0;
  double psnr_db = 0.0;
  double mse = 0.0;
  double perc_proxy = 0.0;

  nlohmann::json to_json() const;
};

std::vector<StabilityRow> stability_table(CodecModel& model,
                                          const std::vector<EvalImage>& images,
                                          std::vector<RdPoint>* per_image = nullptr);

struct MapsResult {
  std::vector<std::filesystem::path> mask_files;
  std::filesystem::path bit_map_file;
  Tensor bit_map;  // [1, 1, h, w] mean bits per latent element
  double bits_y = 0.0;
  int latent_channels = 0;
};

// Writes one grayscale PNG per SSA stage, the bit-allocation map in a
// diverging colormap, and little-endian float64 sidecars for every grid.
MapsResult emit_maps(CodecModel& model, const ImageTensor& image,
                     const TextEmbedding& text,
                     const std::filesystem::path& out_dir);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<RdPoint>& points);

}  // namespace tsic

#endif  // TSIC_EVALUATION_HPP_

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

#ifndef TSIC_TRAINING_HPP_
#define TSIC_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tsic/adversarial.hpp"
#include "tsic/config.hpp"
#include "tsic/entropy.hpp"
#include "tsic/manifest.hpp"
#include "tsic/perceptual.hpp"
#include "tsic/text.hpp"
#include "tsic/transforms.hpp"

namespace tsic {

struct Distortion {
  double d = 0.0;  // k_M * d_mse + k_P * d_perc
  double d_mse = 0.0;
  double d_perc = 0.0;
  std::vector<double> per_sample_mse;
  std::vector<double> per_sample_perc;
  Tensor grad;  // d(d) / d(x_hat), batch mean
};

// Batch-mean distortion between references x and reconstructions x_hat,
// both [N,3,H,W] in [-1, 1].
Distortion distortion(const Tensor& x, const Tensor& x_hat, double k_m,
                      double k_p, const PerceptualAdapter& perceptual,
                      bool with_grad);
Distortion distortion(const ImageTensor& x, const ImageTensor& x_hat,
                      const TrainConfig& cfg);

struct LossReport {
  int stage = 1;
  double total = 0.0;
  double rate_bits = 0.0;  // bits_y + bits_z per image
  double rate_bpp = 0.0;
  double d_mse = 0.0;
  double d_perc = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double lambda_effective = 0.0;
  double k_m = 0.0;
  double k_p = 0.0;
  double beta = 0.0;  // the beta applied; 0 in stage 1

  // lambda * bpp + k_M * d_mse + k_P * d_perc + beta * adv_g
  double recompute_total() const;
  nlohmann::json to_json() const;
};

// total = lambda_eff * bpp + d + beta * adv_g. In stage 1 the adversarial
// term is structurally absent: adv_g is ignored and beta is not applied.
LossReport egp_loss(const RateEstimate& rate, const Distortion& d,
                    double adv_g, double lambda_eff, const TrainConfig& cfg);

// lambda_high when current > target, else lambda_low.
double rate_target_controller(double current_bpp, double target_bpp,
                              LambdaPair lambdas);

// Texts seen by (generator, discriminator) under a variant.
std::pair<TextEmbedding, TextEmbedding> apply_variant(
    Variant variant, const TextEmbedding& text_g, const TextEmbedding& text_d);
// Generator text at inference.
TextEmbedding inference_text(Variant variant, const TextEmbedding& text);

class Adam {
 public:
  Adam() = default;
  Adam(nn::ParameterList params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad() { params_.zero_grad(); }
  long steps() const { return t_; }

 private:
  nn::ParameterList params_;
  std::vector<Tensor> m_, v_;
  double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

TextEncoderAdapter make_text_adapter(const TrainConfig& cfg);

// Encoder, hyperprior, generator and (for stage 2) discriminator.
class CodecModel {
 public:
  explicit CodecModel(const TrainConfig& cfg);

  const TrainConfig& config() const { return cfg_; }
  Encoder& encoder() { return encoder_; }
  Hyperprior& hyperprior() { return hyperprior_; }
  Generator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const TextEncoderAdapter& text_adapter() const { return text_; }

  // Everything the bitstream path depends on (E, P, G incl. buffers).
  nn::ParameterList codec_parameters();
  nn::ParameterList discriminator_parameters();
  // 16-bit digest of codec parameters; stored in bitstream headers.
  std::uint16_t model_id();

  int stage() const { return stage_; }
  void set_stage(int s) { stage_ = s; }

  void save(const std::filesystem::path& path);
  // The configuration stored in the checkpoint rebuilds the architecture.
  static std::unique_ptr<CodecModel> load(const std::filesystem::path& path);
  // Copies codec (and optionally discriminator) weights from a checkpoint.
  void load_weights(const std::filesystem::path& path,
                    bool include_discriminator);

 private:
  TrainConfig cfg_;
  int stage_ = 0;  // 0: untrained
  Encoder encoder_;
  Hyperprior hyperprior_;
  Generator generator_;
  Discriminator discriminator_;
  TextEncoderAdapter text_;
};

struct TrainingSet {
  std::vector<ImageTensor> images;
  std::vector<std::vector<std::string>> captions;
  std::vector<std::vector<TextEmbedding>> embeddings;
  ImageDims dims;
};

// Loads and pads every image to a multiple of 16. All images must share
// one size.
TrainingSet load_training_set(const DatasetManifest& manifest,
                              const TextEncoderAdapter& adapter);

// One optimisation step at a time over a fixed model.
class Trainer {
 public:
  Trainer(CodecModel& model, const TrainConfig& cfg);

  // Forward and backward for one batch, leaving gradients in the
  // parameters. Stage 2 performs the discriminator update first.
  LossReport compute_gradients(const TrainingSet& data,
                               const std::vector<int>& batch,
                               const std::vector<int>& caption_choice);
  LossReport step(const TrainingSet& data, const std::vector<int>& batch,
                  const std::vector<int>& caption_choice);

 private:
  CodecModel& model_;
  TrainConfig cfg_;
  std::unique_ptr<PerceptualAdapter> perceptual_;
  Adam codec_opt_;
  Adam disc_opt_;
  nn::Rng noise_rng_;
  nn::Rng mismatch_rng_;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<LossReport> epoch_means;
};

// Runs `cfg.stage` to completion inside `run_dir`, writing
// stage<k>.ckpt, stage<k>_log.jsonl and stage<k>_config.txt. Stage 2
// starts from cfg.stage1_checkpoint (default run_dir/stage1.ckpt) with a
// freshly initialised discriminator.
TrainResult train_stage(const DatasetManifest& dataset, const TrainConfig& cfg,
                        const std::filesystem::path& run_dir);

}  // namespace tsic

#endif  // TSIC_TRAINING_HPP_

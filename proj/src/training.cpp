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

#include "tsic/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <zlib.h>

#include "tsic/container.hpp"
#include "tsic/image_io.hpp"
#include "tsic/kernels.hpp"

namespace tsic {

namespace fs = std::filesystem;

namespace {

nn::Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return nn::Rng(seq);
}

enum RngStream : std::uint64_t {
  kInitStream = 1,
  kNoiseStream = 2,
  kDataStream = 3,
  kMismatchStream = 4,
  kDiscriminatorStream = 5,
};

Tensor scaled(const Tensor& t, double s) {
  Tensor out = t;
  scale_inplace(out, s);
  return out;
}

}  // namespace

Distortion distortion(const Tensor& x, const Tensor& x_hat, double k_m,
                      double k_p, const PerceptualAdapter& perceptual,
                      bool with_grad) {
  require_shape(x_hat, x.shape(), "distortion");
  Distortion d;
  const int n = x.n();
  const std::size_t per = x.shape().sample();
  d.per_sample_mse.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* a = x.sample(i);
    const double* b = x_hat.sample(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < per; ++k) acc += (b[k] - a[k]) * (b[k] - a[k]);
    d.per_sample_mse[i] = acc / static_cast<double>(per);
    d.d_mse += d.per_sample_mse[i] / n;
  }
  PerceptualResult p = perceptual.evaluate(x, x_hat, with_grad && k_p != 0.0);
  d.per_sample_perc = p.per_sample;
  d.d_perc = p.mean;
  d.d = k_m * d.d_mse + k_p * d.d_perc;
  if (with_grad) {
    d.grad = Tensor(x.shape());
    const double s = 2.0 * k_m / static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      d.grad[k] = s * (x_hat[k] - x[k]);
    }
    if (!p.grad.empty()) {
      for (std::size_t k = 0; k < x.size(); ++k) d.grad[k] += k_p * p.grad[k];
    }
  }
  return d;
}

Distortion distortion(const ImageTensor& x, const ImageTensor& x_hat,
                      const TrainConfig& cfg) {
  if (x.dims() != x_hat.dims()) {
    throw std::invalid_argument("distortion: image dims differ");
  }
  MsSsimProxy proxy;
  return distortion(x.pixels(), x_hat.pixels(), cfg.k_m, cfg.k_p, proxy,
                    false);
}

double LossReport::recompute_total() const {
  return lambda_effective * rate_bpp + k_m * d_mse + k_p * d_perc +
         beta * adv_g;
}

nlohmann::json LossReport::to_json() const {
  return {{"stage", stage},         {"total", total},
          {"rate_bits", rate_bits}, {"rate_bpp", rate_bpp},
          {"d_mse", d_mse},         {"d_perc", d_perc},
          {"adv_g", adv_g},         {"adv_d", adv_d},
          {"lambda_effective", lambda_effective},
          {"k_m", k_m},             {"k_p", k_p},
          {"beta", beta}};
}

LossReport egp_loss(const RateEstimate& rate, const Distortion& d,
                    double adv_g, double lambda_eff, const TrainConfig& cfg) {
  LossReport r;
  r.stage = cfg.stage;
  r.rate_bits = rate.bits_y + rate.bits_z;
  r.rate_bpp = rate.bpp;
  r.d_mse = d.d_mse;
  r.d_perc = d.d_perc;
  r.lambda_effective = lambda_eff;
  r.k_m = cfg.k_m;
  r.k_p = cfg.k_p;
  if (cfg.stage == 2) {
    r.adv_g = adv_g;
    r.beta = cfg.beta;
  }
  r.total = lambda_eff * rate.bpp + d.d + r.beta * r.adv_g;
  return r;
}

double rate_target_controller(double current_bpp, double target_bpp,
                              LambdaPair lambdas) {
  return current_bpp > target_bpp ? lambdas.high : lambdas.low;
}

std::pair<TextEmbedding, TextEmbedding> apply_variant(
    Variant variant, const TextEmbedding& text_g, const TextEmbedding& text_d) {
  return {generator_uses_text(variant) ? text_g : TextEmbedding::zero(),
          discriminator_uses_text(variant) ? text_d : TextEmbedding::zero()};
}

TextEmbedding inference_text(Variant variant, const TextEmbedding& text) {
  return generator_uses_text(variant) ? text : TextEmbedding::zero();
}

// ---------------------------------------------------------------------------

Adam::Adam(nn::ParameterList params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
  for (auto* p : params_.params) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.params.size(); ++i) {
    nn::Parameter& p = *params_.params[i];
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
      p.value[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------

TextEncoderAdapter make_text_adapter(const TrainConfig& cfg) {
  if (cfg.text_backend == TextBackend::kPretrainedFrozen) {
    return TextEncoderAdapter::pretrained_frozen(cfg.text_weights);
  }
  return TextEncoderAdapter::deterministic_stub(cfg.text_seed);
}

CodecModel::CodecModel(const TrainConfig& cfg)
    : cfg_(cfg), text_(make_text_adapter(cfg)) {
  cfg.require_valid();
  nn::Rng rng = stream_rng(cfg.seed, kInitStream);
  encoder_ = Encoder(EncoderConfig{cfg.encoder_head_channels,
                                   cfg.encoder_mid_channels,
                                   cfg.latent_channels},
                     rng);
  hyperprior_ =
      Hyperprior(HyperpriorConfig{cfg.latent_channels, cfg.hyper_channels}, rng);
  generator_ = Generator(GeneratorConfig{cfg.latent_channels,
                                         cfg.residual_channels,
                                         cfg.residual_blocks, cfg.up_channels},
                         rng);
  nn::Rng drng = stream_rng(cfg.seed, kDiscriminatorStream);
  discriminator_ = Discriminator(
      DiscriminatorConfig{cfg.latent_channels, cfg.disc_image_channels,
                          cfg.disc_fusion_channels, cfg.disc_fusion_channels},
      drng);
}

nn::ParameterList CodecModel::codec_parameters() {
  nn::ParameterList out;
  encoder_.collect(out);
  hyperprior_.collect(out);
  generator_.collect(out);
  return out;
}

nn::ParameterList CodecModel::discriminator_parameters() {
  nn::ParameterList out;
  discriminator_.collect(out);
  return out;
}

std::uint16_t CodecModel::model_id() {
  const nn::ParameterList list = codec_parameters();
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto* group : {&list.params, &list.buffers}) {
    for (const nn::Parameter* p : *group) {
      crc = crc32(crc, reinterpret_cast<const Bytef*>(p->value.data()),
                  static_cast<uInt>(p->value.size() * sizeof(double)));
    }
  }
  const auto c = static_cast<std::uint32_t>(crc);
  return static_cast<std::uint16_t>((c ^ (c >> 16)) & 0xFFFF);
}

void CodecModel::save(const fs::path& path) {
  ArrayContainer c;
  auto put_all = [&c](const nn::ParameterList& list) {
    for (const auto* group : {&list.params, &list.buffers}) {
      for (const nn::Parameter* p : *group) c.put(p->name, p->value);
    }
  };
  put_all(codec_parameters());
  if (stage_ >= 2) put_all(discriminator_parameters());
  c.meta()["format"] = "tsic-checkpoint";
  c.meta()["config"] = cfg_.serialize();
  c.meta()["stage"] = stage_;
  c.meta()["model_id"] = model_id();
  c.meta()["text_digest"] = text_.parameter_digest();
  c.save(path);
}

namespace {

void copy_into(const ArrayContainer& c, const nn::ParameterList& list,
               const fs::path& path) {
  for (const auto* group : {&list.params, &list.buffers}) {
    for (nn::Parameter* p : *group) {
      if (!c.has(p->name)) {
        throw std::runtime_error("checkpoint " + path.string() +
                                 " lacks array '" + p->name + "'");
      }
      const Tensor& t = c.get(p->name);
      if (t.shape() != p->value.shape()) {
        throw std::runtime_error("checkpoint " + path.string() + ": '" +
                                 p->name + "' has shape " + t.shape().str() +
                                 ", model expects " + p->value.shape().str());
      }
      p->value = t;
    }
  }
}

}  // namespace

std::unique_ptr<CodecModel> CodecModel::load(const fs::path& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("checkpoint not found: " + path.string());
  }
  const ArrayContainer c = ArrayContainer::load(path);
  if (c.meta().value("format", "") != "tsic-checkpoint") {
    throw std::runtime_error(path.string() + " is not a codec checkpoint");
  }
  auto model = std::make_unique<CodecModel>(
      parse_config_text(c.meta().at("config").get<std::string>(),
                        path.string()));
  model->stage_ = c.meta().at("stage").get<int>();
  copy_into(c, model->codec_parameters(), path);
  if (model->stage_ >= 2) {
    copy_into(c, model->discriminator_parameters(), path);
  }
  return model;
}

void CodecModel::load_weights(const fs::path& path,
                              bool include_discriminator) {
  if (!fs::exists(path)) {
    throw std::runtime_error("checkpoint not found: " + path.string());
  }
  const ArrayContainer c = ArrayContainer::load(path);
  copy_into(c, codec_parameters(), path);
  if (include_discriminator) copy_into(c, discriminator_parameters(), path);
}

// ---------------------------------------------------------------------------

TrainingSet load_training_set(const DatasetManifest& manifest,
                              const TextEncoderAdapter& adapter) {
  if (manifest.records.empty()) {
    throw std::invalid_argument("training set: manifest has no records");
  }
  TrainingSet set;
  for (const ManifestRecord& r : manifest.records) {
    const ImageTensor img =
        pad_to_multiple(normalize_image(read_image(r.resolved)), kLatentStride)
            .image;
    if (set.images.empty()) {
      set.dims = img.dims();
    } else if (img.dims() != set.dims) {
      throw std::invalid_argument(
          "training set: " + r.resolved.string() + " is " +
          std::to_string(img.height()) + "x" + std::to_string(img.width()) +
          " after padding, expected " + std::to_string(set.dims.height) + "x" +
          std::to_string(set.dims.width) + "; all images must share a size");
    }
    set.images.push_back(img);
    set.captions.push_back(r.captions);
    std::vector<TextEmbedding> e;
    for (const std::string& cap : r.captions) {
      e.push_back(embed_text(cap, adapter));
    }
    set.embeddings.push_back(std::move(e));
  }
  return set;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(CodecModel& model, const TrainConfig& cfg)
    : model_(model),
      cfg_(cfg),
      perceptual_(make_perceptual_adapter("ms_ssim")),
      codec_opt_(model.codec_parameters(), cfg.learning_rate),
      disc_opt_(model.discriminator_parameters(), cfg.disc_learning_rate),
      noise_rng_(stream_rng(cfg.seed + 1000003ULL * cfg.stage, kNoiseStream)),
      mismatch_rng_(stream_rng(cfg.seed, kMismatchStream)) {}

LossReport Trainer::compute_gradients(const TrainingSet& data,
                                      const std::vector<int>& batch,
                                      const std::vector<int>& caption_choice) {
  const int b = static_cast<int>(batch.size());
  if (b < 1 || caption_choice.size() != batch.size()) {
    throw std::invalid_argument("trainer: bad batch");
  }
  std::vector<const ImageTensor*> imgs;
  std::vector<TextEmbedding> tg, td;
  for (int i = 0; i < b; ++i) {
    imgs.push_back(&data.images[batch[i]]);
    const TextEmbedding& t = data.embeddings[batch[i]][caption_choice[i]];
    auto [g, d] = apply_variant(cfg_.variant, t, t);
    tg.push_back(g);
    td.push_back(d);
  }
  const Tensor x = stack_images(imgs);
  const Tensor text_g = text_batch(tg);
  const Tensor text_d = text_batch(td);

  codec_opt_.zero_grad();
  Encoder& enc = model_.encoder();
  Hyperprior& hyper = model_.hyperprior();
  Generator& gen = model_.generator();

  const Tensor y = enc.forward(x);
  const Tensor y_noisy =
      quantize_values(y, QuantizeMode::kTrainNoise, &noise_rng_);
  const Tensor y_hat = quantize_values(y, QuantizeMode::kTrainSte, nullptr);
  const Tensor z = hyper.analyze(y);
  const Tensor z_noisy =
      quantize_values(z, QuantizeMode::kTrainNoise, &noise_rng_);
  const Tensor z_hat = quantize_values(z, QuantizeMode::kTrainSte, nullptr);
  const GaussianParams py = hyper.synthesize(z_hat, y.h(), y.w());
  const GaussianParams pz = hyper.z_density(z.shape());
  const GaussianRate ry = gaussian_rate(y_noisy, py.mean, py.scale, true);
  const GaussianRate rz = gaussian_rate(z_noisy, pz.mean, pz.scale, true);
  const double pixels =
      static_cast<double>(b) * data.dims.height * data.dims.width;
  RateEstimate rate{ry.bits / b, rz.bits / b, (ry.bits + rz.bits) / pixels};

  const Tensor x_hat = gen.forward(y_hat, text_g, /*training=*/true);
  Distortion dist =
      distortion(x, x_hat, cfg_.k_m, cfg_.k_p, *perceptual_, true);
  const double lambda =
      rate_target_controller(rate.bpp, cfg_.target_bpp, cfg_.lambdas());

  double adv_g = 0.0, adv_d = 0.0;
  Tensor g_xhat = std::move(dist.grad);
  if (cfg_.stage == 2) {
    Discriminator& disc = model_.discriminator();
    const bool d_text = discriminator_uses_text(cfg_.variant) && b >= 2;
    std::vector<const Tensor*> di = {&x_hat, &x};
    std::vector<const Tensor*> dl = {&y_hat, &y_hat};
    std::vector<const Tensor*> dt = {&text_d, &text_d};
    Tensor text_mis;
    if (d_text) {
      const std::vector<int> perm = derangement(b, mismatch_rng_);
      std::vector<TextEmbedding> mis;
      for (int i = 0; i < b; ++i) {
        mis.push_back(td[perm[i]].relabeled(TextKind::kMismatched));
      }
      text_mis = text_batch(mis);
      di.push_back(&x);
      dl.push_back(&y_hat);
      dt.push_back(&text_mis);
    }
    const std::vector<double> s =
        disc.forward(concat_batch(di), concat_batch(dl), concat_batch(dt));
    const std::span<const double> all(s);
    const AdversarialLoss ld = discriminator_loss(
        all.subspan(0, b), all.subspan(b, b),
        d_text ? all.subspan(2 * b, b) : std::span<const double>{});
    adv_d = ld.value;
    std::vector<double> g(ld.g_fake);
    g.insert(g.end(), ld.g_real.begin(), ld.g_real.end());
    g.insert(g.end(), ld.g_mismatched.begin(), ld.g_mismatched.end());
    disc_opt_.zero_grad();
    disc.backward(g);
    disc_opt_.step();

    const std::vector<double> sf = disc.forward(x_hat, y_hat, text_d);
    const AdversarialLoss lg = generator_adv_loss(sf);
    adv_g = lg.value;
    const Tensor g_img = disc.backward(lg.g_fake);
    disc_opt_.zero_grad();
    for (std::size_t k = 0; k < g_xhat.size(); ++k) {
      g_xhat[k] += cfg_.beta * g_img[k];
    }
  }
  LossReport report = egp_loss(rate, dist, adv_g, lambda, cfg_);
  report.adv_d = adv_d;

  const double rs = lambda / pixels;
  Tensor g_y = quantize_backward(gen.backward(g_xhat).latent,
                                 QuantizeMode::kTrainSte);
  add_inplace(g_y, scaled(ry.g_value, rs));
  Tensor g_z = quantize_backward(
      hyper.synthesize_backward(scaled(ry.g_mean, rs), scaled(ry.g_scale, rs)),
      QuantizeMode::kTrainSte);
  add_inplace(g_z, scaled(rz.g_value, rs));
  hyper.z_density_backward(scaled(rz.g_mean, rs), scaled(rz.g_scale, rs));
  add_inplace(g_y, hyper.analyze_backward(g_z));
  enc.backward(g_y);
  return report;
}

LossReport Trainer::step(const TrainingSet& data, const std::vector<int>& batch,
                         const std::vector<int>& caption_choice) {
  LossReport r = compute_gradients(data, batch, caption_choice);
  codec_opt_.step();
  return r;
}

// ---------------------------------------------------------------------------

namespace {

LossReport mean_report(const std::vector<LossReport>& rs) {
  LossReport m;
  if (rs.empty()) return m;
  m = rs.front();
  for (double LossReport::*f :
       {&LossReport::total, &LossReport::rate_bits, &LossReport::rate_bpp,
        &LossReport::d_mse, &LossReport::d_perc, &LossReport::adv_g,
        &LossReport::adv_d, &LossReport::lambda_effective}) {
    double acc = 0.0;
    for (const LossReport& r : rs) acc += r.*f;
    m.*f = acc / static_cast<double>(rs.size());
  }
  return m;
}

}  // namespace

TrainResult train_stage(const DatasetManifest& dataset, const TrainConfig& cfg,
                        const fs::path& run_dir) {
  cfg.require_valid();
  fs::path stage1_ckpt = cfg.stage1_checkpoint;
  if (cfg.stage == 2) {
    if (stage1_ckpt.empty()) stage1_ckpt = run_dir / "stage1.ckpt";
    if (!fs::exists(stage1_ckpt)) {
      throw std::runtime_error("stage 2 needs a stage-1 checkpoint; " +
                               stage1_ckpt.string() + " does not exist");
    }
  }
  fs::create_directories(run_dir);
  const std::string tag = "stage" + std::to_string(cfg.stage);
  write_file_atomic(run_dir / (tag + "_config.txt"), cfg.serialize());
  if (cfg.threads > 0) set_kernel_threads(cfg.threads);

  CodecModel model(cfg);
  const std::uint32_t text_digest = model.text_adapter().parameter_digest();
  const TrainingSet data = load_training_set(dataset, model.text_adapter());
  if (cfg.stage == 2) {
    const ArrayContainer c = ArrayContainer::load(stage1_ckpt);
    const TrainConfig prior = parse_config_text(
        c.meta().at("config").get<std::string>(), stage1_ckpt.string());
    if (prior.stage1_hash() != cfg.stage1_hash()) {
      throw std::runtime_error(
          stage1_ckpt.string() +
          " was trained with different stage-1 settings (rate target, "
          "architecture, seed or generator-side text)");
    }
    model.load_weights(stage1_ckpt, false);
  }

  Trainer trainer(model, cfg);
  nn::Rng data_rng = stream_rng(cfg.seed + 7919ULL * cfg.stage, kDataStream);
  const int n = static_cast<int>(data.images.size());
  const int bs = cfg.batch_size();
  const int min_batch = cfg.stage == 2 ? 2 : 1;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::ofstream log(run_dir / (tag + "_log.jsonl"), std::ios::trunc);
  if (!log) {
    throw std::runtime_error("cannot write training log in " +
                             run_dir.string());
  }
  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs(); ++epoch) {
    std::shuffle(order.begin(), order.end(), data_rng);
    std::vector<LossReport> reports;
    for (int start = 0; start + min_batch <= n; start += bs) {
      const int end = std::min(n, start + bs);
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      std::vector<int> captions;
      for (int idx : batch) {
        std::uniform_int_distribution<int> pick(
            0, static_cast<int>(data.captions[idx].size()) - 1);
        captions.push_back(pick(data_rng));
      }
      const LossReport r = trainer.step(data, batch, captions);
      if (!std::isfinite(r.total)) {
        throw std::runtime_error("training diverged at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(step));
      }
      nlohmann::json j = r.to_json();
      j["kind"] = "step";
      j["epoch"] = epoch;
      j["step"] = step++;
      log << j.dump() << '\n';
      reports.push_back(r);
    }
    LossReport mean = mean_report(reports);
    nlohmann::json j = mean.to_json();
    j["kind"] = "epoch";
    j["epoch"] = epoch;
    log << j.dump() << '\n';
    log.flush();
    result.epoch_means.push_back(mean);
  }
  if (model.text_adapter().parameter_digest() != text_digest) {
    throw std::logic_error("text encoder parameters changed during training");
  }
  model.set_stage(cfg.stage);
  result.checkpoint = run_dir / (tag + ".ckpt");
  model.save(result.checkpoint);
  return result;
}

}  // namespace tsic

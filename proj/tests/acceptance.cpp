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


// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Trained models are cached under
// $TSIC_ACCEPTANCE_CACHE when set, otherwise in a temporary directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsic/adversarial.hpp"
#include "tsic/container.hpp"
#include "tsic/evaluation.hpp"
#include "tsic/experiment.hpp"
#include "tsic/range_coder.hpp"
#include "tsic/ssa.hpp"
#include "tsic/synthetic.hpp"
#include "tsic/training.hpp"

namespace fs = std::filesystem;
using namespace tsic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

int failures = 0;

void report(int id, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s (%.1fs) %s\n", id, o.pass ? "PASS" : "FAIL",
              secs, o.detail.c_str());
  std::fflush(stdout);
}

Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(s);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

double numeric_derivative(const std::function<double()>& f, double* x) {
  const double keep = *x, eps = 1e-6;
  *x = keep + eps;
  const double up = f();
  *x = keep - eps;
  const double down = f();
  *x = keep;
  return (up - down) / (2 * eps);
}

bool grad_close(double a, double n) {
  return std::abs(a - n) <= 1e-3 * std::max(std::abs(a), std::abs(n)) + 1e-7;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class FixedPerceptual : public PerceptualAdapter {
 public:
  explicit FixedPerceptual(double v) : v_(v) {}
  std::string name() const override { return "fixed"; }
  PerceptualResult evaluate(const Tensor& ref, const Tensor&,
                            bool) const override {
    return {std::vector<double>(ref.n(), v_), v_, {}};
  }

 private:
  double v_;
};

// ---------------------------------------------------------------------------

Outcome rate_oracle() {
  Tensor v({1, 1, 1, 1}), m({1, 1, 1, 1}), s({1, 1, 1, 1}, 1.0);
  const double bits = gaussian_rate(v, m, s, false).bits;
  const double oracle = -std::log2(std::erf(0.5 / std::sqrt(2.0)));
  std::vector<double> pmf(256, 1.0 / 256.0);
  const double uniform = information_bits(pmf) / 256.0;
  const FrequencyTable table = FrequencyTable::uniform(256);
  bool table_exact = true;
  for (int i = 0; i < 256; ++i) {
    table_exact &= -std::log2(table.probability(i)) == 8.0;
  }
  const bool ok = std::abs(bits - 1.3850) < 1e-3 &&
                  std::abs(bits - oracle) < 1e-12 && uniform == 8.0 &&
                  table_exact;
  return {ok, fmt("gaussian %.6f bits (oracle %.6f), uniform %.1f bits/symbol",
                  bits, oracle, uniform)};
}

Outcome ssa_correctness() {
  nn::Rng rng(7);
  SsaBlock block("ssa", 4, rng);
  std::mt19937_64 data(11);
  std::size_t bad = 0, checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const double scale = std::pow(10.0, i % 4);
    const auto mask =
        block.predict_mask(random_tensor({1, 4, 4, 4}, data, -scale, scale));
    for (double v : mask.values.values()) {
      bad += !(v >= 0.0 && v <= 1.0);
      ++checked;
    }
  }
  // Gradients on 2x4x4 instances, through every input and parameter.
  Tensor x = random_tensor({2, 4, 4, 4}, data, -1, 1);
  Tensor text = random_tensor({2, 512, 1, 1}, data, -1, 1);
  for (double& b : block.gamma_layer(0).bias().value.values()) {
    b = std::uniform_real_distribution<double>(-0.3, 0.3)(data);
  }
  const Tensor probe = random_tensor(x.shape(), data, -1, 1);
  auto f = [&] { return dot(block.transform(x, text, true), probe); };
  nn::ParameterList params;
  block.collect(params);
  params.zero_grad();
  f();
  const auto g = block.backward(probe);
  std::size_t grads = 0, grad_bad = 0;
  for (std::size_t i = 0; i < x.size(); ++i, ++grads) {
    grad_bad += !grad_close(g.features[i], numeric_derivative(f, &x[i]));
  }
  for (std::size_t i = 0; i < text.size(); i += 7, ++grads) {
    grad_bad += !grad_close(g.text[i], numeric_derivative(f, &text[i]));
  }
  for (auto* p : params.params) {
    const std::size_t step = std::max<std::size_t>(1, p->value.size() / 17);
    for (std::size_t i = 0; i < p->value.size(); i += step, ++grads) {
      grad_bad += !grad_close(p->grad[i], numeric_derivative(f, &p->value[i]));
    }
  }
  // Mask forced to zero.
  block.mask_head().weight().value.zero();
  block.mask_head().bias().value.fill(-1e4);
  const Tensor y = block.transform(x, text, true);
  const double identity_err = max_abs_diff(y, x);
  const bool ok = bad == 0 && grad_bad == 0 && identity_err == 0.0;
  return {ok, fmt("%.0f of %.0f mask values out of [0, 1]; ",
                  static_cast<double>(bad), static_cast<double>(checked)) +
                  fmt("%.0f of %.0f gradients off; identity error %g",
                      static_cast<double>(grad_bad),
                      static_cast<double>(grads), identity_err)};
}

Outcome loss_formulas() {
  const TrainConfig cfg;
  const Tensor x({1, 3, 4, 4});
  Tensor xh({1, 3, 4, 4}, 0.2);
  const Distortion d =
      distortion(x, xh, cfg.k_m, cfg.k_p, FixedPerceptual(0.32), false);
  TrainConfig s2 = cfg;
  s2.stage = 2;
  Distortion dd;
  dd.d = 0.25;
  const LossReport egp =
      egp_loss(RateEstimate{0, 0, 0.5}, dd, -0.5, 1.0, s2);
  const std::vector<double> zero(8, 0.0), one(8, 1.0), half(8, 0.5);
  const double perfect = discriminator_loss(zero, one, zero).value;
  const double chance = discriminator_loss(half, half, half).value;
  const bool ok = std::abs(d.d - 0.04075) < 1e-15 &&
                  std::abs(egp.total - 0.675) < 1e-15 && perfect < 1e-5 &&
                  std::abs(chance - 3 * std::log(2.0)) < 1e-9;
  return {ok, fmt("d = %.17g, L_EGP = %.17g, L_D(perfect) = %.3g, "
                  "L_D(0.5) - 3 ln 2 = %.3g",
                  d.d, egp.total, perfect, chance - 3 * std::log(2.0))};
}

Outcome bd_rate_tool() {
  const RdCurve a = RdCurve::make({0.1, 0.2, 0.35, 0.5}, {30, 33, 35, 36});
  RdCurve doubled = a;
  for (double& b : doubled.bpp) b *= 2;
  std::vector<double> qa = {30, 32, 34, 36}, qb = {31, 33, 35, 37}, ra, rb;
  auto f = [](double q) { return std::exp(-3.0 + 0.08 * q + 0.002 * q * q); };
  for (double q : qa) ra.push_back(f(q));
  for (double q : qb) rb.push_back(f(q) * std::exp2(std::log2(1.5)));
  const double same = bd_rate(a, a);
  const double dbl = bd_rate(a, doubled);
  const double shift = bd_rate(RdCurve::make(ra, qa), RdCurve::make(rb, qb));
  const bool ok = same == 0.0 && std::abs(dbl - 100) < 0.1 &&
                  std::abs(shift - 50) < 0.5;
  return {ok, fmt("identical %g%%, doubled %.6f%%, log2(1.5) shift %.4f%%",
                  same, dbl, shift)};
}

std::string slurp(const fs::path& p) { return read_file_bytes(p); }

Outcome training_smoke(const DatasetManifest& train, const TrainConfig& base,
                       const fs::path& dir) {
  TrainConfig c = base;
  c.stage = 1;
  c.epochs_stage1 = 5;
  c.deterministic = true;
  const TrainResult a = train_stage(train, c, dir / "a");
  const TrainResult b = train_stage(train, c, dir / "b");
  bool decreasing = a.epoch_means.size() == 5;
  std::string losses;
  for (std::size_t i = 0; i < a.epoch_means.size(); ++i) {
    if (i > 0) decreasing &= a.epoch_means[i].total < a.epoch_means[i - 1].total;
    losses += fmt("%.4f ", a.epoch_means[i].total);
  }
  const bool identical = slurp(a.checkpoint) == slurp(b.checkpoint);
  return {decreasing && identical,
          "epoch losses " + losses + (identical ? "; checkpoints identical"
                                                : "; checkpoints differ")};
}

std::vector<EvalImage> fixture_images() {
  std::vector<EvalImage> out;
  const int sizes[] = {48, 64, 72, 80};
  for (int i = 0; i < 24; ++i) {
    SyntheticOptions o;
    o.size = sizes[i % 4];
    o.seed = 77;
    const SyntheticSample s = make_synthetic_sample(i, o);
    out.push_back({"fixture" + std::to_string(i), normalize_image(s.image),
                   s.captions});
  }
  return out;
}

Outcome bitstream_integrity(CodecModel& model) {
  int exact = 0, within = 0;
  double worst = 0.0;
  const auto images = fixture_images();
  for (const EvalImage& img : images) {
    const CompressedObject obj = compress_image(model, img.image);
    const std::vector<std::uint8_t> bytes = obj.serialize();
    const CompressedObject parsed = CompressedObject::parse(bytes);
    const DecodedLatents dec = decompress_latents(parsed, model.hyperprior());
    // Reference latents straight from the analysis transforms.
    const ImageTensor padded = pad_to_multiple(img.image, kLatentStride).image;
    const Tensor y_cont = model.encoder().forward(padded.pixels());
    const Tensor y = quantize_values(y_cont, QuantizeMode::kEvalRound, nullptr);
    const Tensor z = quantize_values(model.hyperprior().analyze(y_cont),
                                     QuantizeMode::kEvalRound, nullptr);
    exact += max_abs_diff(y, dec.y_hat.values) == 0.0 &&
             max_abs_diff(z, dec.z_hat.values) == 0.0;
    const RateEstimate est =
        estimate_rate(dec.y_hat, dec.z_hat, model.hyperprior(), obj.dims);
    const double est_bytes = (est.bits_y + est.bits_z) / 8.0;
    const double gap = std::abs(static_cast<double>(bytes.size()) - est_bytes);
    within += gap <= 0.02 * est_bytes + 64;
    worst = std::max(worst, gap);
  }
  return {exact == 24 && within == 24,
          fmt("%.0f/24 latents bit-exact, %.0f/24 sizes within 2%% + 64 B "
              "(largest gap %.1f B)",
              exact, within, worst)};
}

Outcome decoder_only_text(CodecModel& model,
                          const std::vector<EvalImage>& images) {
  int identical = 0;
  for (const EvalImage& img : images) {
    const std::vector<std::uint8_t> ref =
        compress_image(model, img.image).serialize();
    bool same = true;
    std::vector<TextEmbedding> texts = {TextEmbedding::zero()};
    for (const std::string& c : img.captions) {
      texts.push_back(embed_text(c, model.text_adapter()));
    }
    for (const TextEmbedding& t : texts) {
      const CompressedObject obj = CompressedObject::parse(ref);
      decompress_image(model, obj, t);
      same &= compress_image(model, img.image).serialize() == ref;
    }
    identical += same;
  }
  const auto rows = stability_protocol(model, images[0], images[0].captions);
  bool constant = true;
  for (const RdPoint& r : rows) constant &= r.bpp == rows[0].bpp;
  return {identical == static_cast<int>(images.size()) && constant,
          fmt("%.0f/%.0f images give identical bytes across 5 captions and "
              "no text; stability bpp %.4f on every row",
              identical, static_cast<double>(images.size()), rows[0].bpp)};
}

Outcome stability(CodecModel& model, const std::vector<EvalImage>& images,
                  const fs::path& out) {
  std::vector<RdPoint> raw;
  const auto rows = stability_table(model, images, &raw);
  write_jsonl(out / "stability_points.jsonl", raw);
  double mean = 0.0, worst_matched = 0.0;
  int k = 0;
  for (const auto& r : rows) {
    if (r.matched) {
      mean += r.perc_proxy;
      ++k;
    }
  }
  mean /= k;
  double spread = 0.0;
  for (const auto& r : rows) {
    if (!r.matched) continue;
    spread = std::max(spread, std::abs(r.perc_proxy - mean) / mean);
    worst_matched = std::max(worst_matched, r.perc_proxy);
  }
  const double mismatched = rows.back().perc_proxy;
  std::ostringstream os;
  os << "matched perc_proxy";
  for (const auto& r : rows) {
    if (r.matched) os << " " << fmt("%.5f", r.perc_proxy);
  }
  os << fmt(" (max spread %.3f%%), mismatched %.5f", 100 * spread, mismatched);
  return {spread < 0.01 && mismatched > worst_matched, os.str()};
}

Outcome ablation(const std::vector<std::vector<fs::path>>& ckpts,
                 const std::vector<Variant>& variants,
                 const std::vector<EvalImage>& images, const fs::path& out) {
  const AblationResult r = run_ablation(variants, ckpts, images);
  write_jsonl(out / "ablation_points.jsonl", r.points);
  write_file_atomic(out / "ablation.json", r.to_json().dump(2) + "\n");
  std::map<Variant, std::optional<double>> bd;
  std::string notes;
  for (const BdRow& row : r.rows) {
    bd[row.variant] = row.bd_perceptual;
    if (!row.bd_perceptual) {
      notes += std::string("; ") + to_string(row.variant) + " undefined (" +
               row.note + ")";
    }
  }
  std::ostringstream os;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    os << to_string(variants[v]) << " bpp/perc";
    const RdCurve& c = r.perceptual_curves[v];
    for (std::size_t i = 0; i < c.size(); ++i) {
      os << fmt(" %.3f/%.4f", c.bpp[i], -c.quality[i]);
    }
    os << "; ";
  }
  auto cell = [](const std::optional<double>& v) {
    return v ? fmt("%.2f%%", *v) : std::string("undefined");
  };
  os << "BD-rate vs full: no_text " << cell(bd[Variant::kNoText])
     << ", no_g_text " << cell(bd[Variant::kNoGText]) << ", no_d_text "
     << cell(bd[Variant::kNoDText]) << notes;
  const bool defined = bd[Variant::kNoText] && bd[Variant::kNoGText] &&
                       bd[Variant::kNoDText];
  const bool ok = defined && *bd[Variant::kNoText] > *bd[Variant::kNoGText] &&
                  *bd[Variant::kNoGText] > 0 && *bd[Variant::kNoDText] > 0;
  return {ok, os.str()};
}

Outcome map_consistency(CodecModel& model, const EvalImage& img,
                        const fs::path& out) {
  const TextEmbedding text = embed_text(img.captions[0], model.text_adapter());
  const MapsResult m = emit_maps(model, img.image, text, out / "matched");
  const MapsResult z =
      emit_maps(model, img.image, TextEmbedding::zero(), out / "zero");
  const double total = sum(m.bit_map) / static_cast<double>(m.bit_map.size()) *
                       m.latent_channels * m.bit_map.h() * m.bit_map.w();
  const double rel = std::abs(total - m.bits_y) / m.bits_y;
  int present = 0;
  for (const auto& f : m.mask_files) present += fs::exists(f);
  int differing = 0;
  for (std::size_t i = 0; i < m.mask_files.size(); ++i) {
    differing += slurp(m.mask_files[i]) != slurp(z.mask_files[i]);
  }
  return {rel <= 1e-6 && present == 5 && m.mask_files.size() == 5,
          fmt("map total %.6f bits vs bits_y %.6f (rel %.2g); %.0f mask "
              "files",
              total, m.bits_y, rel, present) +
              fmt("; %.0f/5 masks differ between matched and zero text",
                  differing)};
}

}  // namespace

int main() {
  const char* cache = std::getenv("TSIC_ACCEPTANCE_CACHE");
  const bool temporary = cache == nullptr || *cache == '\0';
  const fs::path work =
      temporary ? fs::temp_directory_path() /
                      ("tsic_acceptance_" + std::to_string(std::random_device{}()))
                : fs::path(cache);
  fs::create_directories(work);
  std::printf("acceptance work directory: %s\n", work.c_str());

  // Desk-scale profile: 200 training pairs and 24 held-out pairs at 64x64.
  TrainConfig base;
  base.learning_rate = 1e-3;
  base.disc_learning_rate = 1e-3;
  base.epochs_stage1 = 12;
  base.epochs_stage2 = 6;
  base.seed = 2026;
  base.deterministic = true;
  SyntheticOptions train_opt;
  train_opt.seed = 0;
  const DatasetManifest train = write_synthetic_dataset(work / "train", train_opt);
  base.manifest = work / "train" / "manifest.jsonl";
  SyntheticOptions eval_opt;
  eval_opt.count = 24;
  eval_opt.seed = 1;
  const std::vector<EvalImage> eval_images =
      load_eval_images(write_synthetic_dataset(work / "eval", eval_opt));

  report(2, rate_oracle);
  report(3, ssa_correctness);
  report(4, loss_formulas);
  report(8, bd_rate_tool);
  report(9, [&] { return training_smoke(train, base, work / "smoke"); });

  const std::vector<Variant> variants = {Variant::kFull, Variant::kNoGText,
                                         Variant::kNoDText, Variant::kNoText};
  const std::vector<double> targets(std::begin(kTargetBpps),
                                    std::end(kTargetBpps));
  std::vector<std::vector<fs::path>> ckpts;
  std::string train_error;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (Variant v : variants) {
      ckpts.emplace_back();
      for (double t : targets) {
        ckpts.back().push_back(
            train_point(train, base, v, t, work / "runs",
                        [](const std::string& s) {
                          std::printf("  training %s\n", s.c_str());
                          std::fflush(stdout);
                        }));
      }
    }
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  std::printf("  model training took %.0fs\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count());

  if (!train_error.empty()) {
    for (int id : {1, 5, 6, 7, 10}) {
      report(id, [&] { return Outcome{false, "training failed: " + train_error}; });
    }
  } else {
    auto full = CodecModel::load(ckpts[0][1]);
    fs::create_directories(work / "report");
    report(1, [&] { return bitstream_integrity(*full); });
    report(5, [&] { return decoder_only_text(*full, eval_images); });
    report(6, [&] { return stability(*full, eval_images, work / "report"); });
    report(7, [&] {
      return ablation(ckpts, variants, eval_images, work / "report");
    });
    report(10, [&] {
      return map_consistency(*full, eval_images[0], work / "report" / "maps");
    });
  }

  std::printf("acceptance: %d criteria failed\n", failures);
  if (temporary) {
    std::error_code ec;
    fs::remove_all(work, ec);
  }
  return failures == 0 ? 0 : 1;
}

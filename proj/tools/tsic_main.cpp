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


#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsic/container.hpp"
#include "tsic/evaluation.hpp"
#include "tsic/experiment.hpp"
#include "tsic/image_io.hpp"
#include "tsic/synthetic.hpp"
#include "tsic/training.hpp"

namespace fs = std::filesystem;
using namespace tsic;

namespace {

// Options shared by every command that builds a configuration.
struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string target_bpp;
  std::string variant;
  std::string text_backend;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config key: --set key=value");
    app->add_option("--seed", seed, "Random seed");
    app->add_flag("--deterministic", deterministic,
                  "Single-threaded kernels for bitwise reproducibility");
    app->add_option("--target-bpp", target_bpp, "Rate target")
        ->check(CLI::IsMember({"0.15", "0.3", "0.30", "0.45"}));
    app->add_option("--variant", variant, "Text ablation variant")
        ->check(CLI::IsMember({"full", "no_g_text", "no_d_text", "no_text"}));
    app->add_option("--text-backend", text_backend, "Text encoder backend")
        ->check(CLI::IsMember({"pretrained_frozen", "deterministic_stub"}));
  }

  // File, then --set, then the dedicated flags.
  TrainConfig resolve() const {
    TrainConfig c = config.empty() ? config_from_overrides(sets)
                                   : load_config(config, sets);
    if (seed) c.seed = *seed;
    if (deterministic) c.deterministic = true;
    if (!target_bpp.empty()) c.target_bpp = std::stod(target_bpp);
    if (!variant.empty()) c.variant = parse_variant(variant);
    if (!text_backend.empty()) c.text_backend = parse_text_backend(text_backend);
    if (c.deterministic) c.threads = 1;
    return c;
  }
};

struct TextFlags {
  std::string caption;
  bool no_text = false;

  void add_to(CLI::App* app) {
    auto* cap = app->add_option("--caption", caption, "Decoder-side caption");
    auto* none = app->add_flag("--no-text", no_text, "Decode with zero text");
    cap->excludes(none);
  }

  TextEmbedding embedding(CodecModel& model) const {
    if (no_text) return TextEmbedding::zero();
    if (caption.empty()) {
      throw CLI::ValidationError("text", "give --caption or --no-text");
    }
    return inference_text(model.config().variant,
                          embed_text(caption, model.text_adapter()));
  }
};

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

fs::path default_run_dir(const TrainConfig& c) {
  TrainConfig key = c;
  key.stage = 1;
  key.run_dir.clear();
  return fs::path("runs") / key.hash();
}

DatasetManifest require_manifest(const fs::path& path) {
  if (path.empty()) {
    throw std::runtime_error("no manifest given (set manifest in the config "
                             "or pass --manifest)");
  }
  DatasetManifest m = load_manifest(path, true);
  if (m.records.empty()) {
    throw std::runtime_error("manifest " + path.string() + " has no images");
  }
  return m;
}

int cmd_train(const ConfigFlags& flags, const std::string& manifest,
              const std::string& run_dir, int stage) {
  TrainConfig c = flags.resolve();
  if (!manifest.empty()) c.manifest = manifest;
  if (!run_dir.empty()) c.run_dir = run_dir;
  if (c.run_dir.empty()) c.run_dir = default_run_dir(c);
  c.require_valid();
  const DatasetManifest data = require_manifest(c.manifest);
  fs::create_directories(c.run_dir);
  write_file_atomic(c.run_dir / "config.txt", c.serialize());
  std::vector<int> stages = stage == 0 ? std::vector<int>{1, 2}
                                       : std::vector<int>{stage};
  for (int s : stages) {
    TrainConfig sc = c;
    sc.stage = s;
    const TrainResult r = train_stage(data, sc, c.run_dir);
    nlohmann::json j = {{"stage", s}, {"checkpoint", r.checkpoint.string()}};
    if (!r.epoch_means.empty()) j["final"] = r.epoch_means.back().to_json();
    print_json(j);
  }
  return 0;
}

int cmd_compress(const std::string& image, const std::string& checkpoint,
                 const std::string& out, const TextFlags& text) {
  if (!text.caption.empty() || text.no_text) {
    throw CLI::ValidationError(
        "compress", "captions are decoder-side only; compress takes no text");
  }
  auto model = CodecModel::load(checkpoint);
  const ImageTensor img = normalize_image(read_image(image));
  const CompressedObject obj = compress_image(*model, img);
  const std::vector<std::uint8_t> bytes = obj.serialize();
  write_file_atomic(out, std::string(bytes.begin(), bytes.end()));
  print_json({{"output", out},
              {"bytes", bytes.size()},
              {"height", obj.dims.height},
              {"width", obj.dims.width},
              {"bpp", obj.bpp()}});
  return 0;
}

CompressedObject read_bitstream(const fs::path& path) {
  const std::string s = read_file_bytes(path);
  return CompressedObject::parse(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

int cmd_decompress(const std::string& bitstream, const std::string& checkpoint,
                   const std::string& out, const TextFlags& text,
                   const std::string& maps_dir) {
  auto model = CodecModel::load(checkpoint);
  const CompressedObject obj = read_bitstream(bitstream);
  const TextEmbedding t = text.embedding(*model);
  const Reconstruction rec = decompress_image(*model, obj, t);
  write_png(out, denormalize_image(rec.image));
  nlohmann::json j = {{"output", out},
                      {"height", obj.dims.height},
                      {"width", obj.dims.width},
                      {"bpp", obj.bpp()},
                      {"text", to_string(t.kind())}};
  if (!maps_dir.empty()) {
    const MapsResult m = emit_maps(*model, rec.image, t, maps_dir);
    j["maps"] = maps_dir;
    j["bits_y"] = m.bits_y;
  }
  print_json(j);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest,
             int caption_index, const std::string& out) {
  auto model = CodecModel::load(checkpoint);
  const std::vector<EvalImage> images =
      load_eval_images(load_manifest(manifest, true));
  const std::vector<RdPoint> pts = evaluate(images, *model, caption_index);
  if (!out.empty()) write_jsonl(out, pts);
  const auto [bpp, q] = mean_rate_quality(pts, QualityAxis::kPerceptual);
  const auto [bpp2, psnr] = mean_rate_quality(pts, QualityAxis::kPsnr);
  (void)bpp2;
  print_json({{"images", pts.size()},
              {"variant", to_string(model->config().variant)},
              {"mean_bpp", bpp},
              {"mean_perc_proxy", -q},
              {"mean_psnr_db", psnr}});
  return 0;
}

int cmd_ablate(const ConfigFlags& flags, const std::string& manifest,
               const std::string& eval_manifest, const std::string& root,
               bool train_missing) {
  TrainConfig c = flags.resolve();
  if (!manifest.empty()) c.manifest = manifest;
  c.require_valid();
  const std::vector<Variant> variants = {Variant::kFull, Variant::kNoGText,
                                         Variant::kNoDText, Variant::kNoText};
  const std::vector<double> targets(std::begin(kTargetBpps),
                                    std::end(kTargetBpps));
  if (train_missing) {
    const DatasetManifest data = require_manifest(c.manifest);
    for (Variant v : variants) {
      for (double t : targets) {
        train_point(data, c, v, t, root,
                    [](const std::string& s) { std::cerr << s << "\n"; });
      }
    }
  }
  const auto ckpts = require_checkpoints(c, variants, targets, root);
  const std::vector<EvalImage> images =
      load_eval_images(load_manifest(eval_manifest, true));
  const AblationResult r = run_ablation(variants, ckpts, images);
  const fs::path out = fs::path(root) / "ablation";
  fs::create_directories(out);
  write_jsonl(out / "rd_points.jsonl", r.points);
  write_file_atomic(out / "ablation.json", r.to_json().dump(2) + "\n");
  std::printf("%-12s %22s %18s\n", "variant", "BD-rate perc_proxy (%)",
              "BD-rate PSNR (%)");
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v.value_or(0.0));
    return v ? std::string(buf) : std::string("undefined");
  };
  for (const BdRow& row : r.rows) {
    std::printf("%-12s %22s %18s\n", to_string(row.variant),
                cell(row.bd_perceptual).c_str(), cell(row.bd_psnr).c_str());
    if (!row.note.empty()) std::printf("  %s\n", row.note.c_str());
  }
  return 0;
}

int cmd_stability(const std::string& checkpoint, const std::string& manifest,
                  const std::string& out) {
  auto model = CodecModel::load(checkpoint);
  const std::vector<EvalImage> images =
      load_eval_images(load_manifest(manifest, true));
  std::vector<RdPoint> raw;
  const std::vector<StabilityRow> rows = stability_table(*model, images, &raw);
  if (!out.empty()) {
    fs::create_directories(out);
    write_jsonl(fs::path(out) / "stability_points.jsonl", raw);
    nlohmann::json j;
    for (const StabilityRow& r : rows) j.push_back(r.to_json());
    write_file_atomic(fs::path(out) / "stability.json", j.dump(2) + "\n");
  }
  std::printf("%-12s %10s %10s %12s\n", "caption", "bpp", "PSNR", "perc_proxy");
  for (const StabilityRow& r : rows) {
    std::printf("%-12s %10.4f %10.4f %12.6f\n", r.label.c_str(), r.bpp,
                r.psnr_db, r.perc_proxy);
  }
  return 0;
}

int cmd_emit_maps(const std::string& image, const std::string& checkpoint,
                  const TextFlags& text, const std::string& out) {
  auto model = CodecModel::load(checkpoint);
  const ImageTensor img = normalize_image(read_image(image));
  const MapsResult m = emit_maps(*model, img, text.embedding(*model), out);
  nlohmann::json j = {{"output", out},
                      {"masks", m.mask_files.size()},
                      {"bits_y", m.bits_y}};
  print_json(j);
  return 0;
}

int cmd_synth(const std::string& out, int count, int size, std::uint64_t seed) {
  SyntheticOptions o;
  o.count = count;
  o.size = size;
  o.seed = seed;
  const DatasetManifest m = write_synthetic_dataset(out, o);
  print_json({{"output", out}, {"images", m.records.size()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned image codec with decoder-side text"};
  app.require_subcommand(1);

  ConfigFlags train_cfg, ablate_cfg;
  std::string manifest, run_dir, checkpoint, out, image, bitstream,
      eval_manifest, maps_dir;
  std::string root = "runs";
  int stage = 0, caption_index = 0, count = 200, size = 64;
  std::uint64_t synth_seed = 0;
  bool train_missing = false;
  TextFlags compress_text, decompress_text, maps_text;

  auto* train = app.add_subcommand("train", "Train stage 1, stage 2 or both");
  train_cfg.add_to(train);
  train->add_option("--manifest", manifest, "Training manifest (JSONL)");
  train->add_option("--run-dir", run_dir,
                    "Output directory (default: runs/<config hash>)");
  train->add_option("--stage", stage, "1 or 2 (default: both in order)")
      ->check(CLI::IsMember({1, 2}));

  auto* compress = app.add_subcommand("compress", "Image -> bitstream");
  compress->add_option("image", image, "Input PNG or JPEG")
      ->required()
      ->check(CLI::ExistingFile);
  compress->add_option("--checkpoint", checkpoint)->required();
  compress->add_option("-o,--output", out, "Bitstream path")->required();
  compress_text.add_to(compress);

  auto* decompress =
      app.add_subcommand("decompress", "Bitstream + caption -> image");
  decompress->add_option("bitstream", bitstream)
      ->required()
      ->check(CLI::ExistingFile);
  decompress->add_option("--checkpoint", checkpoint)->required();
  decompress->add_option("-o,--output", out, "Output PNG")->required();
  decompress->add_option("--emit-maps", maps_dir,
                         "Also write masks and the bit-allocation map here");
  decompress_text.add_to(decompress);

  auto* eval = app.add_subcommand("eval", "Rate and quality per image");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--manifest", manifest, "Evaluation manifest")->required();
  eval->add_option("--caption-index", caption_index, "Caption used per image");
  eval->add_option("-o,--output", out, "RD points (JSONL)");

  auto* ablate = app.add_subcommand(
      "ablate", "BD-rate of the text ablations against the full model");
  ablate_cfg.add_to(ablate);
  ablate->add_option("--manifest", manifest, "Training manifest");
  ablate->add_option("--eval-manifest", eval_manifest)->required();
  ablate->add_option("--runs-root", root, "Checkpoint tree (default: runs)");
  ablate->add_flag("--train", train_missing, "Train missing checkpoints");

  auto* stability = app.add_subcommand(
      "stability", "Decode one bitstream per caption (matched + mismatched)");
  stability->add_option("--checkpoint", checkpoint)->required();
  stability->add_option("--manifest", manifest, "Evaluation manifest")
      ->required();
  stability->add_option("-o,--output", out, "Directory for the tables");

  auto* maps = app.add_subcommand("emit-maps",
                                  "Write SSA masks and the bit-allocation map");
  maps->add_option("image", image)->required()->check(CLI::ExistingFile);
  maps->add_option("--checkpoint", checkpoint)->required();
  maps->add_option("-o,--output", out, "Output directory")->required();
  maps_text.add_to(maps);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("-o,--output", out, "Output directory")->required();
  synth->add_option("--count", count)->check(CLI::PositiveNumber);
  synth->add_option("--size", size)->check(CLI::Range(16, 4096));
  synth->add_option("--seed", synth_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_cfg, manifest, run_dir, stage);
    if (*compress) return cmd_compress(image, checkpoint, out, compress_text);
    if (*decompress) {
      return cmd_decompress(bitstream, checkpoint, out, decompress_text,
                            maps_dir);
    }
    if (*eval) return cmd_eval(checkpoint, manifest, caption_index, out);
    if (*ablate) {
      return cmd_ablate(ablate_cfg, manifest, eval_manifest, root,
                        train_missing);
    }
    if (*stability) return cmd_stability(checkpoint, manifest, out);
    if (*maps) return cmd_emit_maps(image, checkpoint, maps_text, out);
    if (*synth) return cmd_synth(out, count, size, synth_seed);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

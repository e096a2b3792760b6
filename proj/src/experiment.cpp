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


#include "tsic/experiment.hpp"

#include <sstream>
#include <stdexcept>

#include "tsic/training.hpp"

namespace tsic {

namespace fs = std::filesystem;

namespace {

std::string target_tag(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace

PointPaths point_paths(const TrainConfig& base, Variant variant,
                       double target_bpp, const fs::path& root) {
  PointPaths p;
  p.stage1 = base;
  p.stage1.variant = variant;
  p.stage1.target_bpp = target_bpp;
  p.stage1.stage = 1;
  p.stage1.stage1_checkpoint.clear();
  p.stage1.run_dir.clear();
  p.stage1_dir = root / ("stage1-" + p.stage1.stage1_hash());
  p.stage1.run_dir = p.stage1_dir;

  p.stage2 = p.stage1;
  p.stage2.stage = 2;
  p.stage2.stage1_checkpoint = p.stage1_checkpoint();
  p.stage2.run_dir.clear();
  p.stage2_dir = root / (std::string(to_string(variant)) + "-bpp" +
                         target_tag(target_bpp) + "-" + p.stage2.hash());
  p.stage2.run_dir = p.stage2_dir;
  return p;
}

fs::path train_point(const DatasetManifest& dataset, const TrainConfig& base,
                     Variant variant, double target_bpp, const fs::path& root,
                     const ProgressFn& progress) {
  const PointPaths p = point_paths(base, variant, target_bpp, root);
  auto say = [&progress](const std::string& s) {
    if (progress) progress(s);
  };
  if (!fs::exists(p.stage1_checkpoint())) {
    say("stage 1 -> " + p.stage1_dir.string());
    train_stage(dataset, p.stage1, p.stage1_dir);
  }
  if (!fs::exists(p.stage2_checkpoint())) {
    say("stage 2 -> " + p.stage2_dir.string());
    train_stage(dataset, p.stage2, p.stage2_dir);
  }
  return p.stage2_checkpoint();
}

std::vector<std::vector<fs::path>> require_checkpoints(
    const TrainConfig& base, const std::vector<Variant>& variants,
    const std::vector<double>& targets, const fs::path& root) {
  std::vector<std::vector<fs::path>> out;
  std::string missing;
  for (Variant v : variants) {
    out.emplace_back();
    for (double t : targets) {
      const fs::path c = point_paths(base, v, t, root).stage2_checkpoint();
      if (!fs::exists(c)) {
        missing += "\n  - " + std::string(to_string(v)) + " at " +
                   target_tag(t) + " bpp (" + c.string() + ")";
      }
      out.back().push_back(c);
    }
  }
  if (!missing.empty()) {
    throw std::runtime_error("missing variant checkpoints:" + missing);
  }
  return out;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json j;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    j["curves"][to_string(variants[v])] = {
        {"perceptual", perceptual_curves[v].to_json()},
        {"psnr", psnr_curves[v].to_json()}};
  }
  j["baseline"] = to_string(variants.front());
  for (const BdRow& r : rows) {
    nlohmann::json row = {{"variant", to_string(r.variant)},
                          {"perceptual_percent", nullptr},
                          {"psnr_percent", nullptr}};
    if (r.bd_perceptual) row["perceptual_percent"] = *r.bd_perceptual;
    if (r.bd_psnr) row["psnr_percent"] = *r.bd_psnr;
    if (!r.note.empty()) row["note"] = r.note;
    j["bd_rate"].push_back(row);
  }
  return j;
}

AblationResult run_ablation(
    const std::vector<Variant>& variants,
    const std::vector<std::vector<fs::path>>& checkpoints,
    const std::vector<EvalImage>& images) {
  if (variants.size() < 2 || checkpoints.size() != variants.size()) {
    throw std::invalid_argument(
        "ablation: need a baseline and at least one other variant");
  }
  AblationResult out;
  out.variants = variants;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<double> rate, perc, psnr;
    for (const fs::path& ckpt : checkpoints[v]) {
      auto model = CodecModel::load(ckpt);
      if (model->config().variant != variants[v]) {
        throw std::runtime_error(ckpt.string() + " was trained as " +
                                 to_string(model->config().variant) +
                                 ", expected " + to_string(variants[v]));
      }
      const std::vector<RdPoint> pts = evaluate(images, *model);
      out.points.insert(out.points.end(), pts.begin(), pts.end());
      const auto [r, qp] = mean_rate_quality(pts, QualityAxis::kPerceptual);
      const auto [r2, qs] = mean_rate_quality(pts, QualityAxis::kPsnr);
      (void)r2;
      rate.push_back(r);
      perc.push_back(qp);
      psnr.push_back(qs);
    }
    out.perceptual_curves.push_back(RdCurve::make(rate, perc));
    out.psnr_curves.push_back(RdCurve::make(rate, psnr));
  }
  for (std::size_t v = 1; v < variants.size(); ++v) {
    BdRow row;
    row.variant = variants[v];
    auto attempt = [&](const RdCurve& a, const RdCurve& b, const char* axis,
                       std::optional<double>& dst) {
      try {
        dst = bd_rate(a, b);
      } catch (const std::invalid_argument& e) {
        row.note += std::string(row.note.empty() ? "" : "; ") + axis + ": " +
                    e.what();
      }
    };
    attempt(out.perceptual_curves[0], out.perceptual_curves[v], "perceptual",
            row.bd_perceptual);
    attempt(out.psnr_curves[0], out.psnr_curves[v], "psnr", row.bd_psnr);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace tsic

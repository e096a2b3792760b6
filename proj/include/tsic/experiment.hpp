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


#ifndef TSIC_EXPERIMENT_HPP_
#define TSIC_EXPERIMENT_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsic/config.hpp"
#include "tsic/evaluation.hpp"
#include "tsic/manifest.hpp"

namespace tsic {

// Where the checkpoints of one (variant, rate target) pair live under a
// runs root. Stage-1 directories are keyed by the stage-1 hash, so variants
// with the same generator-side text share them.
struct PointPaths {
  TrainConfig stage1;
  TrainConfig stage2;
  std::filesystem::path stage1_dir;
  std::filesystem::path stage2_dir;
  std::filesystem::path stage1_checkpoint() const {
    return stage1_dir / "stage1.ckpt";
  }
  std::filesystem::path stage2_checkpoint() const {
    return stage2_dir / "stage2.ckpt";
  }
};

PointPaths point_paths(const TrainConfig& base, Variant variant,
                       double target_bpp, const std::filesystem::path& root);

using ProgressFn = std::function<void(const std::string&)>;

// Trains whatever is missing for the pair and returns the stage-2
// checkpoint. Existing checkpoints are reused.
std::filesystem::path train_point(const DatasetManifest& dataset,
                                  const TrainConfig& base, Variant variant,
                                  double target_bpp,
                                  const std::filesystem::path& root,
                                  const ProgressFn& progress = {});

// Stage-2 checkpoints for every pair; throws listing all missing ones.
std::vector<std::vector<std::filesystem::path>> require_checkpoints(
    const TrainConfig& base, const std::vector<Variant>& variants,
    const std::vector<double>& targets, const std::filesystem::path& root);

// BD-rate in percent; empty when the curves admit none (for example
// disjoint quality ranges), with the reason in `note`.
struct BdRow {
  Variant variant = Variant::kFull;
  std::optional<double> bd_perceptual;  // quality = -perc_proxy
  std::optional<double> bd_psnr;        // quality = PSNR
  std::string note;
};

struct AblationResult {
  std::vector<Variant> variants;
  std::vector<RdCurve> perceptual_curves;  // per variant
  std::vector<RdCurve> psnr_curves;
  std::vector<RdPoint> points;
  std::vector<BdRow> rows;  // every variant but the first, against it

  nlohmann::json to_json() const;
};

// Evaluates checkpoints[v][t] on `images` and tabulates BD-rate of each
// variant against variants[0].
AblationResult run_ablation(
    const std::vector<Variant>& variants,
    const std::vector<std::vector<std::filesystem::path>>& checkpoints,
    const std::vector<EvalImage>& images);

}  // namespace tsic

#endif  // TSIC_EXPERIMENT_HPP_

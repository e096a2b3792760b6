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


#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsic/experiment.hpp"
#include "tsic/synthetic.hpp"

using tsic::TrainConfig;
using tsic::Variant;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.encoder_head_channels = 4;
  c.encoder_mid_channels = 4;
  c.latent_channels = 4;
  c.hyper_channels = 4;
  c.residual_channels = 4;
  c.residual_blocks = 1;
  c.up_channels = {4, 4, 4, 4};
  c.disc_image_channels = 4;
  c.disc_fusion_channels = 4;
  c.batch_size_stage1 = 2;
  c.batch_size_stage2 = 2;
  c.epochs_stage1 = 1;
  c.epochs_stage2 = 1;
  c.learning_rate = 1e-3;
  c.seed = 13;
  return c;
}

}  // namespace

TEST_CASE("run paths share stage 1 across discriminator-only variants") {
  const TrainConfig c = tiny_config();
  const auto full = tsic::point_paths(c, Variant::kFull, 0.3, "runs");
  const auto no_d = tsic::point_paths(c, Variant::kNoDText, 0.3, "runs");
  const auto no_g = tsic::point_paths(c, Variant::kNoGText, 0.3, "runs");
  const auto no_t = tsic::point_paths(c, Variant::kNoText, 0.3, "runs");
  CHECK(full.stage1_dir == no_d.stage1_dir);
  CHECK(no_g.stage1_dir == no_t.stage1_dir);
  CHECK(full.stage1_dir != no_g.stage1_dir);
  CHECK(full.stage2_dir != no_d.stage2_dir);
  CHECK(full.stage1_dir !=
        tsic::point_paths(c, Variant::kFull, 0.15, "runs").stage1_dir);
}

TEST_CASE("missing checkpoints are listed together") {
  tsic::test::TempDir dir("exp_missing");
  try {
    tsic::require_checkpoints(tiny_config(), {Variant::kFull, Variant::kNoText},
                              {0.15, 0.3}, dir.path());
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing variant checkpoints") != std::string::npos);
    CHECK(msg.find("no_text") != std::string::npos);
    CHECK(msg.find("0.15") != std::string::npos);
  }
}

TEST_CASE("train points reuse checkpoints and feed the ablation") {
  tsic::test::TempDir dir("exp_ablate");
  tsic::SyntheticOptions o;
  o.count = 4;
  o.size = 32;
  o.seed = 5;
  const auto manifest = tsic::write_synthetic_dataset(dir.path() / "data", o);
  const TrainConfig c = tiny_config();
  const std::vector<Variant> variants = {Variant::kFull, Variant::kNoDText};
  const std::vector<double> targets = {0.15, 0.45};
  int stage1_runs = 0;
  auto count = [&](const std::string& s) {
    stage1_runs += s.find("stage 1") != std::string::npos;
  };
  for (Variant v : variants) {
    for (double t : targets) {
      tsic::train_point(manifest, c, v, t, dir.path() / "runs", count);
    }
  }
  CHECK(stage1_runs == 2);
  const auto again = std::filesystem::last_write_time(
      tsic::point_paths(c, Variant::kFull, 0.15, dir.path() / "runs")
          .stage2_checkpoint());
  tsic::train_point(manifest, c, Variant::kFull, 0.15, dir.path() / "runs",
                    count);
  CHECK(stage1_runs == 2);
  CHECK(std::filesystem::last_write_time(
            tsic::point_paths(c, Variant::kFull, 0.15, dir.path() / "runs")
                .stage2_checkpoint()) == again);

  const auto ckpts =
      tsic::require_checkpoints(c, variants, targets, dir.path() / "runs");
  const auto images = tsic::load_eval_images(manifest);
  try {
    const tsic::AblationResult r =
        tsic::run_ablation(variants, ckpts, images);
    CHECK(r.points.size() == variants.size() * targets.size() * images.size());
    REQUIRE(r.rows.size() == 1);
    const tsic::BdRow& row = r.rows[0];
    CHECK(row.variant == Variant::kNoDText);
    // Either a finite value or a recorded reason, never both missing.
    for (const auto* v : {&row.bd_perceptual, &row.bd_psnr}) {
      if (*v) CHECK(std::isfinite(**v));
    }
    CHECK((row.bd_perceptual && row.bd_psnr) == row.note.empty());
    CHECK(r.to_json()["bd_rate"].size() == 1);
  } catch (const std::invalid_argument& e) {
    // Untrained tiny models may not order their rates across targets.
    CHECK(std::string(e.what()).find("bpp") != std::string::npos);
  }

  auto swapped = ckpts;
  std::swap(swapped[0], swapped[1]);
  CHECK_THROWS_WITH_AS(tsic::run_ablation(variants, swapped, images),
                       doctest::Contains("expected full"), std::runtime_error);
}

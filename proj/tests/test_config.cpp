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


#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "tsic/config.hpp"

using tsic::TrainConfig;
using tsic::Variant;

TEST_CASE("config defaults carry the published loss constants") {
  const TrainConfig c;
  CHECK(c.beta == 0.15);
  CHECK(c.k_m == 1.0);
  CHECK(c.k_p == 0.075 / 32.0);
  CHECK(c.batch_size_stage1 == 8);
  CHECK(c.batch_size_stage2 == 16);
  CHECK(c.residual_blocks == 9);
  CHECK(c.validate().empty());
}

TEST_CASE("variant names and text routing") {
  for (Variant v : {Variant::kFull, Variant::kNoGText, Variant::kNoDText,
                    Variant::kNoText}) {
    CHECK(tsic::parse_variant(tsic::to_string(v)) == v);
  }
  CHECK(tsic::generator_uses_text(Variant::kFull));
  CHECK(tsic::discriminator_uses_text(Variant::kFull));
  CHECK_FALSE(tsic::generator_uses_text(Variant::kNoGText));
  CHECK(tsic::discriminator_uses_text(Variant::kNoGText));
  CHECK(tsic::generator_uses_text(Variant::kNoDText));
  CHECK_FALSE(tsic::discriminator_uses_text(Variant::kNoDText));
  CHECK_FALSE(tsic::generator_uses_text(Variant::kNoText));
  CHECK_FALSE(tsic::discriminator_uses_text(Variant::kNoText));
  CHECK_THROWS_AS(tsic::parse_variant("half"), std::invalid_argument);
}

TEST_CASE("default lambdas decrease with the rate target") {
  double prev_low = 1e9, prev_high = 1e9;
  for (double t : tsic::kTargetBpps) {
    const tsic::LambdaPair p = tsic::default_lambdas(t);
    CHECK(p.low >= 0.0);
    CHECK(p.low < p.high);
    CHECK(p.low < prev_low);
    CHECK(p.high < prev_high);
    prev_low = p.low;
    prev_high = p.high;
  }
  TrainConfig c;
  c.lambda_low = 0.5;
  CHECK(c.lambdas().low == 0.5);
  CHECK(c.lambdas().high == tsic::default_lambdas(c.target_bpp).high);
}

TEST_CASE("config text parsing and overrides") {
  const TrainConfig c = tsic::parse_config_text(
      "# comment\n"
      "stage = 2\n"
      "target_bpp = 0.45   # trailing comment\n"
      "variant = no_d_text\n"
      "up_channels = 8,8,4,4\n"
      "\n"
      "deterministic = false\n");
  CHECK(c.stage == 2);
  CHECK(c.target_bpp == 0.45);
  CHECK(c.variant == Variant::kNoDText);
  CHECK(c.up_channels == std::vector<int>{8, 8, 4, 4});
  CHECK_FALSE(c.deterministic);

  const TrainConfig o =
      tsic::config_from_overrides({"target_bpp=0.15", "seed=42"}, c);
  CHECK(o.target_bpp == 0.15);
  CHECK(o.seed == 42);
  CHECK(o.stage == 2);

  CHECK_THROWS_AS(tsic::parse_config_text("nonsense = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(tsic::parse_config_text("stage\n"), std::invalid_argument);
  CHECK_THROWS_AS(tsic::parse_config_text("stage = two\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(tsic::config_from_overrides({"stage"}),
                  std::invalid_argument);
}

TEST_CASE("config file overrides win and relative paths follow the file") {
  tsic::test::TempDir dir("config");
  const auto path = dir.path() / "run.cfg";
  {
    std::ofstream out(path);
    out << "manifest = data/manifest.jsonl\nepochs_stage1 = 3\n";
  }
  const TrainConfig c = tsic::load_config(path, {"epochs_stage1=7"});
  CHECK(c.epochs_stage1 == 7);
  CHECK(c.manifest == dir.path() / "data/manifest.jsonl");
  CHECK_THROWS(tsic::load_config(dir.path() / "missing.cfg"));
}

TEST_CASE("validation enumerates every violation") {
  TrainConfig c;
  c.stage = 3;
  c.beta = -1.0;
  c.batch_size_stage1 = 0;
  c.lambda_low = 2.0;
  c.lambda_high = 1.0;
  c.up_channels = {4, 4};
  const auto errors = c.validate();
  CHECK(errors.size() == 5);
  try {
    c.require_valid();
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage") != std::string::npos);
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("batch_size_stage1") != std::string::npos);
    CHECK(msg.find("lambda") != std::string::npos);
    CHECK(msg.find("up_channels") != std::string::npos);
  }
  TrainConfig p;
  p.text_backend = tsic::TextBackend::kPretrainedFrozen;
  CHECK(p.validate().size() == 1);
}

TEST_CASE("serialization round-trips and hashes are stable") {
  TrainConfig c;
  c.set("variant", "no_g_text");
  c.set("seed", "17");
  c.set("learning_rate", "0.001");
  const TrainConfig back = tsic::parse_config_text(c.serialize());
  CHECK(back.serialize() == c.serialize());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  TrainConfig d = c;
  d.set("seed", "18");
  CHECK(d.hash() != c.hash());

  // Thread count and locations do not name a different model.
  TrainConfig e = c;
  e.set("threads", "1");
  e.set("run_dir", "/elsewhere");
  e.set("stage1_checkpoint", "/elsewhere/stage1.ckpt");
  CHECK(e.hash() == c.hash());
  e.set("stage", "2");
  TrainConfig f = e;
  f.set("stage1_checkpoint", "other/stage1.ckpt");
  CHECK(f.hash() == e.hash());
  f.set("target_bpp", "0.15");
  CHECK(f.hash() != e.hash());
}

TEST_CASE("stage-one hash is shared by variants with the same generator text") {
  TrainConfig full, no_d, no_g, no_text;
  no_d.variant = Variant::kNoDText;
  no_g.variant = Variant::kNoGText;
  no_text.variant = Variant::kNoText;
  CHECK(full.stage1_hash() == no_d.stage1_hash());
  CHECK(no_g.stage1_hash() == no_text.stage1_hash());
  CHECK(full.stage1_hash() != no_g.stage1_hash());
  CHECK(full.hash() != no_d.hash());

  // Stage-two settings do not matter; an explicit default lambda does not
  // change the hash.
  TrainConfig s2 = full;
  s2.stage = 2;
  s2.beta = 0.3;
  s2.epochs_stage2 = 11;
  CHECK(s2.stage1_hash() == full.stage1_hash());
  TrainConfig explicit_lambda = full;
  explicit_lambda.lambda_low = full.lambdas().low;
  CHECK(explicit_lambda.stage1_hash() == full.stage1_hash());
  TrainConfig other_target = full;
  other_target.target_bpp = 0.15;
  CHECK(other_target.stage1_hash() != full.stage1_hash());
}

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

#ifndef TSIC_CONFIG_HPP_
#define TSIC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsic/text.hpp"

namespace tsic {

enum class Variant { kFull, kNoGText, kNoDText, kNoText };

const char* to_string(Variant v);
Variant parse_variant(std::string_view name);
bool generator_uses_text(Variant v);
bool discriminator_uses_text(Variant v);

inline constexpr double kTargetBpps[] = {0.15, 0.30, 0.45};

struct LambdaPair {
  double low = 0.0;
  double high = 0.0;
};

// Default rate penalties for a target; unknown targets interpolate in log
// space between the tabulated ones.
LambdaPair default_lambdas(double target_bpp);

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path run_dir;
  std::filesystem::path stage1_checkpoint;
  int stage = 1;
  double target_bpp = 0.30;
  double lambda_low = -1.0;  // negative: take the default for target_bpp
  double lambda_high = -1.0;
  double beta = 0.15;
  double k_m = 1.0;
  double k_p = 0.075 / 32.0;
  int batch_size_stage1 = 8;
  int batch_size_stage2 = 16;
  int epochs_stage1 = 5;
  int epochs_stage2 = 5;
  double learning_rate = 1e-4;
  double disc_learning_rate = 1e-4;
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;
  bool deterministic = true;
  int threads = 0;  // 0: OpenMP default
  TextBackend text_backend = TextBackend::kDeterministicStub;
  std::filesystem::path text_weights;
  std::uint64_t text_seed = 0;
  // Architecture.
  int encoder_head_channels = 16;
  int encoder_mid_channels = 32;
  int latent_channels = 64;
  int hyper_channels = 32;
  int residual_channels = 32;
  int residual_blocks = 9;
  std::vector<int> up_channels = {32, 32, 16, 16};
  int disc_image_channels = 32;
  int disc_fusion_channels = 64;

  LambdaPair lambdas() const;
  int batch_size() const {
    return stage == 1 ? batch_size_stage1 : batch_size_stage2;
  }
  int epochs() const { return stage == 1 ? epochs_stage1 : epochs_stage2; }

  // Applies one `key=value` assignment. Throws on unknown keys or values
  // that do not parse.
  void set(std::string_view key, std::string_view value);
  // Every violated constraint, empty when valid.
  std::vector<std::string> validate() const;
  void require_valid() const;

  // Canonical `key = value` lines, sorted by key.
  std::string serialize() const;
  std::map<std::string, std::string> entries() const;
  // Hex digest of the settings that determine the trained model, used for
  // run-directory names. Thread count and output/input locations are left
  // out; a stage-2 config contributes its stage-1 hash instead.
  std::string hash() const;
  // Digest of the settings stage 1 depends on. Variants with the same
  // generator-side text use share it.
  std::string stage1_hash() const;
};

// Reads a flat `key = value` document (# starts a comment) and applies
// `overrides` after it; overrides win.
TrainConfig load_config(const std::filesystem::path& path,
                        const std::vector<std::string>& overrides = {});
// Same format from an in-memory document; paths are left as written.
TrainConfig parse_config_text(const std::string& text,
                              const std::string& source = "<config>");
TrainConfig config_from_overrides(const std::vector<std::string>& overrides,
                                  TrainConfig base = {});

}  // namespace tsic

#endif  // TSIC_CONFIG_HPP_

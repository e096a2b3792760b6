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

#include "tsic/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

namespace tsic {

namespace fs = std::filesystem;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoGText: return "no_g_text";
    case Variant::kNoDText: return "no_d_text";
    case Variant::kNoText: return "no_text";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kFull, Variant::kNoGText, Variant::kNoDText,
                    Variant::kNoText}) {
    if (name == to_string(v)) return v;
  }
  throw std::invalid_argument(
      "unknown variant '" + std::string(name) +
      "' (expected full, no_g_text, no_d_text or no_text)");
}

bool generator_uses_text(Variant v) {
  return v == Variant::kFull || v == Variant::kNoDText;
}

bool discriminator_uses_text(Variant v) {
  return v == Variant::kFull || v == Variant::kNoGText;
}

LambdaPair default_lambdas(double target_bpp) {
  struct Row {
    double target;
    LambdaPair pair;
  };
  static const Row rows[] = {
      {0.15, {0.04, 1.0}}, {0.30, {0.01, 0.25}}, {0.45, {0.0025, 0.0625}}};
  if (target_bpp <= rows[0].target) return rows[0].pair;
  if (target_bpp >= rows[2].target) return rows[2].pair;
  for (int i = 0; i < 2; ++i) {
    if (target_bpp <= rows[i + 1].target) {
      const double t = (target_bpp - rows[i].target) /
                       (rows[i + 1].target - rows[i].target);
      auto lerp = [t](double a, double b) {
        return std::exp((1 - t) * std::log(a) + t * std::log(b));
      };
      return {lerp(rows[i].pair.low, rows[i + 1].pair.low),
              lerp(rows[i].pair.high, rows[i + 1].pair.high)};
    }
  }
  return rows[2].pair;
}

LambdaPair TrainConfig::lambdas() const {
  LambdaPair p = default_lambdas(target_bpp);
  if (lambda_low >= 0) p.low = lambda_low;
  if (lambda_high >= 0) p.high = lambda_high;
  return p;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T v{};
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw std::invalid_argument("config: " + std::string(key) +
                                ": cannot parse '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: " + std::string(key) +
                              ": expected true or false, got '" + s + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
  bool stage1 = false;  // affects stage-1 training
};

#define TSIC_NUM(name, type, s1)                                          \
  {#name,                                                                 \
   {[](TrainConfig& c, std::string_view v) {                              \
      c.name = parse_number<type>(#name, v);                              \
    },                                                                    \
    [](const TrainConfig& c) {                                            \
      if constexpr (std::is_floating_point_v<type>) {                     \
        return format_double(c.name);                                     \
      } else {                                                            \
        return std::to_string(c.name);                                    \
      }                                                                   \
    },                                                                    \
    s1}}

#define TSIC_PATH(name, s1)                                               \
  {#name,                                                                 \
   {[](TrainConfig& c, std::string_view v) { c.name = trim(v); },         \
    [](const TrainConfig& c) { return c.name.string(); }, s1}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      TSIC_PATH(manifest, true),
      TSIC_PATH(run_dir, false),
      TSIC_PATH(stage1_checkpoint, false),
      TSIC_NUM(stage, int, false),
      TSIC_NUM(target_bpp, double, true),
      TSIC_NUM(lambda_low, double, false),
      TSIC_NUM(lambda_high, double, false),
      TSIC_NUM(beta, double, false),
      TSIC_NUM(k_m, double, true),
      TSIC_NUM(k_p, double, true),
      TSIC_NUM(batch_size_stage1, int, true),
      TSIC_NUM(batch_size_stage2, int, false),
      TSIC_NUM(epochs_stage1, int, true),
      TSIC_NUM(epochs_stage2, int, false),
      TSIC_NUM(learning_rate, double, true),
      TSIC_NUM(disc_learning_rate, double, false),
      TSIC_NUM(seed, std::uint64_t, true),
      TSIC_NUM(threads, int, false),
      TSIC_PATH(text_weights, true),
      TSIC_NUM(text_seed, std::uint64_t, true),
      TSIC_NUM(encoder_head_channels, int, true),
      TSIC_NUM(encoder_mid_channels, int, true),
      TSIC_NUM(latent_channels, int, true),
      TSIC_NUM(hyper_channels, int, true),
      TSIC_NUM(residual_channels, int, true),
      TSIC_NUM(residual_blocks, int, true),
      TSIC_NUM(disc_image_channels, int, false),
      TSIC_NUM(disc_fusion_channels, int, false),
      {"variant",
       {[](TrainConfig& c, std::string_view v) {
          c.variant = parse_variant(trim(v));
        },
        [](const TrainConfig& c) { return std::string(to_string(c.variant)); },
        false}},
      {"deterministic",
       {[](TrainConfig& c, std::string_view v) {
          c.deterministic = parse_bool("deterministic", v);
        },
        [](const TrainConfig& c) {
          return std::string(c.deterministic ? "true" : "false");
        },
        true}},
      {"text_backend",
       {[](TrainConfig& c, std::string_view v) {
          c.text_backend = parse_text_backend(trim(v));
        },
        [](const TrainConfig& c) {
          return std::string(to_string(c.text_backend));
        },
        true}},
      {"up_channels",
       {[](TrainConfig& c, std::string_view v) {
          std::vector<int> out;
          std::stringstream ss{std::string(v)};
          std::string item;
          while (std::getline(ss, item, ',')) {
            out.push_back(parse_number<int>("up_channels", item));
          }
          c.up_channels = out;
        },
        [](const TrainConfig& c) { return join_ints(c.up_channels); }, true}},
  };
  return table;
}

#undef TSIC_NUM
#undef TSIC_PATH

std::string digest(const std::string& s) {
  const uLong a = crc32(0L, reinterpret_cast<const Bytef*>(s.data()),
                        static_cast<uInt>(s.size()));
  const uLong b = adler32(1L, reinterpret_cast<const Bytef*>(s.data()),
                          static_cast<uInt>(s.size()));
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << (a & 0xFFFFFFFFu)
     << std::setw(8) << std::setfill('0') << (b & 0xFFFFFFFFu);
  return os.str();
}

}  // namespace

void TrainConfig::set(std::string_view key, std::string_view value) {
  const std::string k = trim(key);
  auto it = fields().find(k);
  if (it == fields().end()) {
    throw std::invalid_argument("config: unknown key '" + k + "'");
  }
  it->second.set(*this, value);
}

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> e;
  if (stage != 1 && stage != 2) e.push_back("stage must be 1 or 2");
  if (!(target_bpp > 0)) e.push_back("target_bpp must be positive");
  const LambdaPair l = lambdas();
  if (!(l.low >= 0 && l.low < l.high)) {
    e.push_back("need 0 <= lambda_low < lambda_high");
  }
  if (beta < 0) e.push_back("beta must be >= 0");
  if (k_m < 0) e.push_back("k_m must be >= 0");
  if (k_p < 0) e.push_back("k_p must be >= 0");
  if (batch_size_stage1 < 1) e.push_back("batch_size_stage1 must be positive");
  if (batch_size_stage2 < 1) e.push_back("batch_size_stage2 must be positive");
  if (epochs_stage1 < 0) e.push_back("epochs_stage1 must be >= 0");
  if (epochs_stage2 < 0) e.push_back("epochs_stage2 must be >= 0");
  if (!(learning_rate > 0)) e.push_back("learning_rate must be positive");
  if (!(disc_learning_rate > 0)) {
    e.push_back("disc_learning_rate must be positive");
  }
  if (threads < 0) e.push_back("threads must be >= 0");
  for (int c : {encoder_head_channels, encoder_mid_channels, latent_channels,
                hyper_channels, residual_channels, disc_fusion_channels}) {
    if (c < 1) {
      e.push_back("channel widths must be positive");
      break;
    }
  }
  if (disc_image_channels < 2 || disc_image_channels % 2 != 0) {
    e.push_back("disc_image_channels must be an even number >= 2");
  }
  if (residual_blocks < 1) e.push_back("residual_blocks must be >= 1");
  if (up_channels.size() != 4) {
    e.push_back("up_channels must list exactly 4 widths");
  } else if (*std::min_element(up_channels.begin(), up_channels.end()) < 1) {
    e.push_back("up_channels must be positive");
  }
  if (text_backend == TextBackend::kPretrainedFrozen && text_weights.empty()) {
    e.push_back(
        "text_backend=pretrained_frozen needs text_weights (or use "
        "text_backend=deterministic_stub)");
  }
  return e;
}

void TrainConfig::require_valid() const {
  const auto errors = validate();
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : errors) msg += "\n  - " + s;
  throw std::invalid_argument(msg);
}

std::map<std::string, std::string> TrainConfig::entries() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(*this);
  return out;
}

std::string TrainConfig::serialize() const {
  std::string s;
  for (const auto& [k, v] : entries()) s += k + " = " + v + "\n";
  return s;
}

std::string TrainConfig::hash() const {
  std::string s;
  for (const auto& [k, v] : entries()) {
    if (k == "threads" || k == "run_dir" || k == "stage1_checkpoint") continue;
    s += k + " = " + v + "\n";
  }
  if (stage == 2) s += "stage1 = " + stage1_hash() + "\n";
  return digest(s);
}

std::string TrainConfig::stage1_hash() const {
  std::string s;
  for (const auto& [k, f] : fields()) {
    if (f.stage1) s += k + " = " + f.get(*this) + "\n";
  }
  // Resolved lambdas, so explicit and default values hash alike.
  const LambdaPair l = lambdas();
  s += "lambda_pair = " + format_double(l.low) + "," + format_double(l.high) +
       "\n";
  s += std::string("generator_text = ") +
       (generator_uses_text(variant) ? "1" : "0") + "\n";
  return digest(s);
}

TrainConfig config_from_overrides(const std::vector<std::string>& overrides,
                                  TrainConfig base) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("override '" + o + "' is not key=value");
    }
    base.set(std::string_view(o).substr(0, eq),
             std::string_view(o).substr(eq + 1));
  }
  return base;
}

TrainConfig parse_config_text(const std::string& text,
                              const std::string& source) {
  std::istringstream in(text);
  TrainConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    try {
      c.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  return c;
}

TrainConfig load_config(const fs::path& path,
                        const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  TrainConfig c = parse_config_text(buf.str(), path.string());
  // Relative paths in the file are taken relative to the file.
  const fs::path base = path.parent_path();
  for (fs::path* p : {&c.manifest, &c.run_dir, &c.stage1_checkpoint,
                      &c.text_weights}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config_from_overrides(overrides, c);
}

}  // namespace tsic

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

#include "tsic/text.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <zlib.h>

#include "tsic/container.hpp"

namespace tsic {

namespace fs = std::filesystem;

const char* to_string(TextKind kind) {
  switch (kind) {
    case TextKind::kMatched: return "matched";
    case TextKind::kMismatched: return "mismatched";
    case TextKind::kZero: return "zero";
  }
  return "?";
}

TextEmbedding::TextEmbedding(std::vector<double> vector, TextKind kind)
    : vector_(std::move(vector)), kind_(kind) {
  if (vector_.size() != static_cast<std::size_t>(kTextDim)) {
    throw std::invalid_argument("TextEmbedding: expected length 512, got " +
                                std::to_string(vector_.size()));
  }
  if (kind_ == TextKind::kZero &&
      std::any_of(vector_.begin(), vector_.end(),
                  [](double v) { return v != 0.0; })) {
    throw std::invalid_argument("TextEmbedding: zero kind with nonzero data");
  }
}

TextEmbedding TextEmbedding::zero() {
  return TextEmbedding(std::vector<double>(kTextDim, 0.0), TextKind::kZero);
}

TextEmbedding TextEmbedding::relabeled(TextKind kind) const {
  if (kind == TextKind::kZero) return zero();
  return TextEmbedding(vector_, kind);
}

Tensor text_batch(std::span<const TextEmbedding> texts) {
  Tensor t({static_cast<int>(texts.size()), kTextDim, 1, 1});
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::copy(texts[i].vector().begin(), texts[i].vector().end(),
              t.sample(static_cast<int>(i)));
  }
  return t;
}

const char* to_string(TextBackend backend) {
  return backend == TextBackend::kPretrainedFrozen ? "pretrained_frozen"
                                                   : "deterministic_stub";
}

TextBackend parse_text_backend(std::string_view name) {
  if (name == "pretrained_frozen") return TextBackend::kPretrainedFrozen;
  if (name == "deterministic_stub") return TextBackend::kDeterministicStub;
  throw std::invalid_argument("unknown text backend '" + std::string(name) +
                              "' (expected pretrained_frozen or "
                              "deterministic_stub)");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",   "the",  "of",   "on",  "in",    "with", "and",
      "is",   "are",  "that", "this", "one", "over",  "at",   "to",
      "it",   "its",  "by",   "for",  "from", "there", "as",  "into",
      // Caption framing words that carry no visual content.
      "picture", "image", "photo", "showing", "shows", "depicting",
      "scene", "background", "backdrop", "surroundings", "set", "against",
      "which", "has", "some", "featuring"};
  return words;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

struct TextEncoderAdapter::Table {
  std::unordered_map<std::string, int> vocab;
  Tensor token_embedding;  // [V, D, 1, 1]
  Tensor projection;       // [512, D, 1, 1]
  std::uint32_t digest = 0;
};

TextEncoderAdapter TextEncoderAdapter::deterministic_stub(std::uint64_t seed) {
  TextEncoderAdapter a;
  a.backend_ = TextBackend::kDeterministicStub;
  a.seed_ = seed;
  return a;
}

TextEncoderAdapter TextEncoderAdapter::pretrained_frozen(
    const fs::path& weights) {
  if (weights.empty() || !fs::exists(weights)) {
    throw std::runtime_error(
        "pretrained text encoder weights not found at '" + weights.string() +
        "'; set text_backend=deterministic_stub to run without them");
  }
  const ArrayContainer c = ArrayContainer::load(weights);
  auto table = std::make_shared<Table>();
  table->token_embedding = c.get("token_embedding");
  table->projection = c.get("projection");
  const auto vocab = c.meta().at("vocab").get<std::vector<std::string>>();
  if (static_cast<int>(vocab.size()) != table->token_embedding.n() ||
      table->projection.n() != kTextDim ||
      table->projection.c() != table->token_embedding.c()) {
    throw std::runtime_error("pretrained text encoder: inconsistent shapes");
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    table->vocab.emplace(vocab[i], static_cast<int>(i));
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const Tensor* t : {&table->token_embedding, &table->projection}) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(t->data()),
                static_cast<uInt>(t->size() * sizeof(double)));
  }
  table->digest = static_cast<std::uint32_t>(crc);
  TextEncoderAdapter a;
  a.backend_ = TextBackend::kPretrainedFrozen;
  a.table_ = std::move(table);
  return a;
}

std::uint32_t TextEncoderAdapter::parameter_digest() const {
  if (table_) return table_->digest;
  return static_cast<std::uint32_t>(splitmix64(seed_));
}

TextEmbedding TextEncoderAdapter::embed(std::string_view caption) const {
  const std::vector<std::string> tokens = tokenize(caption);
  std::vector<double> v(kTextDim, 0.0);
  if (backend_ == TextBackend::kDeterministicStub) {
    int used = 0;
    for (const std::string& tok : tokens) {
      if (stopwords().count(tok)) continue;
      const std::uint64_t base = seed_ ^ fnv1a(tok);
      for (int i = 0; i < kTextDim; ++i) {
        const std::uint64_t r = splitmix64(base + 0x632BE59BD9B4E019ULL * i);
        v[i] += 2.0 * (static_cast<double>(r >> 11) * 0x1.0p-53) - 1.0;
      }
      ++used;
    }
    if (used > 0) {
      for (double& x : v) x /= used;
    }
    return TextEmbedding(std::move(v), TextKind::kMatched);
  }
  const Table& t = *table_;
  const int dim = t.token_embedding.c();
  std::vector<double> mean(dim, 0.0);
  int used = 0;
  for (const std::string& tok : tokens) {
    auto it = t.vocab.find(tok);
    if (it == t.vocab.end()) continue;
    const double* row = t.token_embedding.sample(it->second);
    for (int d = 0; d < dim; ++d) mean[d] += row[d];
    ++used;
  }
  if (used > 0) {
    for (double& x : mean) x /= used;
    for (int o = 0; o < kTextDim; ++o) {
      const double* row = t.projection.sample(o);
      double acc = 0.0;
      for (int d = 0; d < dim; ++d) acc += row[d] * mean[d];
      v[o] = acc;
    }
  }
  return TextEmbedding(std::move(v), TextKind::kMatched);
}

TextEmbedding embed_text(std::string_view caption,
                         const TextEncoderAdapter& adapter) {
  if (tokenize(caption).empty()) {
    throw std::invalid_argument(
        "embed_text: empty caption (use a zero embedding instead)");
  }
  return adapter.embed(caption);
}

}  // namespace tsic

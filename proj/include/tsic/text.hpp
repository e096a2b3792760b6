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

#ifndef TSIC_TEXT_HPP_
#define TSIC_TEXT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsic/tensor.hpp"

namespace tsic {

inline constexpr int kTextDim = 512;

enum class TextKind { kMatched, kMismatched, kZero };

const char* to_string(TextKind kind);

// Decoder-side text vector. kind == kZero implies every component is 0.
class TextEmbedding {
 public:
  TextEmbedding() : TextEmbedding(zero()) {}
  TextEmbedding(std::vector<double> vector, TextKind kind);

  static TextEmbedding zero();

  std::span<const double> vector() const { return vector_; }
  TextKind kind() const { return kind_; }
  // Same vector, different provenance label. Relabelling to kZero clears it.
  TextEmbedding relabeled(TextKind kind) const;

 private:
  std::vector<double> vector_;
  TextKind kind_ = TextKind::kZero;
};

// [N, 512, 1, 1] batch of text vectors.
Tensor text_batch(std::span<const TextEmbedding> texts);

enum class TextBackend { kPretrainedFrozen, kDeterministicStub };

const char* to_string(TextBackend backend);
TextBackend parse_text_backend(std::string_view name);

// Lower-cased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

// Maps captions to 512-d vectors. Parameters of either backend are fixed at
// construction and never exposed for update.
class TextEncoderAdapter {
 public:
  // Feature-hashing bag of words: every non-stopword token is expanded to a
  // seeded pseudo-random vector in [-1, 1]^512 and the vectors are averaged.
  static TextEncoderAdapter deterministic_stub(std::uint64_t seed = 0);
  // Frozen token-embedding table plus linear projection to 512 dims, read
  // from an array container holding `token_embedding` [V, D], `projection`
  // [512, D] and meta.vocab. Throws if the file is absent.
  static TextEncoderAdapter pretrained_frozen(
      const std::filesystem::path& weights);

  TextBackend backend() const { return backend_; }
  std::uint64_t seed() const { return seed_; }
  // Checksum over all backend parameters (seed for the stub).
  std::uint32_t parameter_digest() const;

  TextEmbedding embed(std::string_view caption) const;

 private:
  struct Table;
  TextBackend backend_ = TextBackend::kDeterministicStub;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const Table> table_;
};

// Caption embedding (kind = matched). Empty captions are rejected; request
// an all-zero embedding with TextEmbedding::zero().
TextEmbedding embed_text(std::string_view caption,
                         const TextEncoderAdapter& adapter);

}  // namespace tsic

#endif  // TSIC_TEXT_HPP_

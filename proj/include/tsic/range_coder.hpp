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

#ifndef TSIC_RANGE_CODER_HPP_
#define TSIC_RANGE_CODER_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tsic {

inline constexpr int kFrequencyBits = 16;
inline constexpr std::uint32_t kFrequencyTotal = 1u << kFrequencyBits;

class CodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cumulative 16-bit frequency table; every symbol has a nonzero count and
// the counts sum to exactly kFrequencyTotal.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  // Normalizes `pmf` (nonnegative, finite, positive sum) and quantizes it,
  // flooring every entry at one count.
  static FrequencyTable from_pmf(std::span<const double> pmf);
  static FrequencyTable uniform(int symbols);

  int size() const { return static_cast<int>(cdf_.size()) - 1; }
  std::uint32_t start(int s) const { return cdf_[s]; }
  std::uint32_t freq(int s) const { return cdf_[s + 1] - cdf_[s]; }
  double probability(int s) const {
    return static_cast<double>(freq(s)) / kFrequencyTotal;
  }
  // Symbol whose interval contains `target` in [0, kFrequencyTotal).
  int find(std::uint32_t target) const;

 private:
  std::vector<std::uint32_t> cdf_;
};

class RangeEncoder {
 public:
  void encode(const FrequencyTable& table, int symbol);
  // Up to 16 equiprobable bits.
  void encode_bits(std::uint32_t value, int bits);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(const FrequencyTable& table);
  std::uint32_t decode_bits(int bits);
  // Throws unless the stream was consumed exactly and the final state
  // matches the encoder's flush.
  void finish() const;

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

struct EncodedPayload {
  std::vector<std::uint8_t> bytes;
  std::uint32_t checksum = 0;  // of the symbol sequence
};

// CRC-32 over the symbols as little-endian int32.
std::uint32_t symbol_checksum(std::span<const std::int32_t> symbols);

// Codes symbol i under tables[table_index[i]]. An empty table_index means
// one table per symbol, or a single shared table when tables.size() == 1.
// Symbols are validated before anything is emitted.
EncodedPayload range_encode(std::span<const std::int32_t> symbols,
                            std::span<const FrequencyTable> tables,
                            std::span<const std::uint32_t> table_index = {});

// Exact inverse of range_encode; truncated or corrupted payloads and
// table mismatches raise CodingError.
std::vector<std::int32_t> range_decode(
    std::span<const std::uint8_t> payload, std::uint32_t checksum,
    std::span<const FrequencyTable> tables, std::size_t count,
    std::span<const std::uint32_t> table_index = {});

}  // namespace tsic

#endif  // TSIC_RANGE_CODER_HPP_

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

#include "tsic/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <zlib.h>

namespace tsic {

namespace {

constexpr std::uint32_t kTop = 1u << 24;

}  // namespace

FrequencyTable FrequencyTable::from_pmf(std::span<const double> pmf) {
  const std::size_t n = pmf.size();
  if (n == 0 || n > kFrequencyTotal) {
    throw std::invalid_argument("FrequencyTable: bad alphabet size " +
                                std::to_string(n));
  }
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("FrequencyTable: invalid probability");
    }
    total += p;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("FrequencyTable: probabilities sum to zero");
  }
  const double avail = static_cast<double>(kFrequencyTotal - n);
  std::vector<std::int64_t> freq(n);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    freq[i] = 1 + static_cast<std::int64_t>(std::floor(pmf[i] / total * avail));
    sum += freq[i];
  }
  // Hand leftover counts to the most probable symbols, largest first.
  std::int64_t leftover = static_cast<std::int64_t>(kFrequencyTotal) - sum;
  if (leftover > 0) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pmf[a] > pmf[b];
                     });
    for (std::size_t k = 0; leftover > 0; k = (k + 1) % n, --leftover) {
      ++freq[order[k]];
    }
  }
  FrequencyTable t;
  t.cdf_.resize(n + 1);
  t.cdf_[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t.cdf_[i + 1] = t.cdf_[i] + static_cast<std::uint32_t>(freq[i]);
  }
  return t;
}

FrequencyTable FrequencyTable::uniform(int symbols) {
  std::vector<double> pmf(symbols, 1.0);
  return from_pmf(pmf);
}

int FrequencyTable::find(std::uint32_t target) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  return static_cast<int>(it - cdf_.begin()) - 1;
}

// ---------------------------------------------------------------------------

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(const FrequencyTable& table, int symbol) {
  const std::uint32_t r = range_ >> kFrequencyBits;
  low_ += static_cast<std::uint64_t>(table.start(symbol)) * r;
  range_ = table.freq(symbol) * r;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_bits(std::uint32_t value, int bits) {
  const std::uint32_t r = range_ >> bits;
  low_ += static_cast<std::uint64_t>(value) * r;
  range_ = r;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes)
    : bytes_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) {
    throw CodingError("range decoder: payload truncated");
  }
  return bytes_[pos_++];
}

int RangeDecoder::decode(const FrequencyTable& table) {
  const std::uint32_t r = range_ >> kFrequencyBits;
  const std::uint32_t target = code_ / r;
  if (target >= kFrequencyTotal) {
    throw CodingError("range decoder: corrupted payload");
  }
  const int s = table.find(target);
  code_ -= table.start(s) * r;
  range_ = table.freq(s) * r;
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return s;
}

std::uint32_t RangeDecoder::decode_bits(int bits) {
  const std::uint32_t r = range_ >> bits;
  const std::uint32_t v = code_ / r;
  if (v >= (1u << bits)) throw CodingError("range decoder: corrupted payload");
  code_ -= v * r;
  range_ = r;
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return v;
}

void RangeDecoder::finish() const {
  if (pos_ != bytes_.size()) {
    throw CodingError("range decoder: " +
                      std::to_string(bytes_.size() - pos_) +
                      " trailing bytes in payload");
  }
  if (code_ != 0) {
    throw CodingError("range decoder: final state mismatch (corrupted)");
  }
}

// ---------------------------------------------------------------------------

std::uint32_t symbol_checksum(std::span<const std::int32_t> symbols) {
  uLong crc = crc32(0L, Z_NULL, 0);
  if (!symbols.empty()) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(symbols.data()),
                static_cast<uInt>(symbols.size_bytes()));
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

const FrequencyTable& table_for(std::span<const FrequencyTable> tables,
                                std::span<const std::uint32_t> index,
                                std::size_t i) {
  std::size_t t;
  if (!index.empty()) {
    t = index[i];
  } else {
    t = tables.size() == 1 ? 0 : i;
  }
  if (t >= tables.size()) {
    throw std::invalid_argument("range coder: table index out of range");
  }
  return tables[t];
}

void check_layout(std::size_t count, std::span<const FrequencyTable> tables,
                  std::span<const std::uint32_t> index) {
  if (!index.empty() && index.size() != count) {
    throw std::invalid_argument("range coder: table_index length mismatch");
  }
  if (index.empty() && tables.size() != 1 && tables.size() != count &&
      count != 0) {
    throw std::invalid_argument("range coder: need one table per symbol");
  }
}

}  // namespace

EncodedPayload range_encode(std::span<const std::int32_t> symbols,
                            std::span<const FrequencyTable> tables,
                            std::span<const std::uint32_t> table_index) {
  check_layout(symbols.size(), tables, table_index);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const FrequencyTable& t = table_for(tables, table_index, i);
    if (symbols[i] < 0 || symbols[i] >= t.size()) {
      throw std::invalid_argument("range_encode: symbol " +
                                  std::to_string(symbols[i]) + " at " +
                                  std::to_string(i) + " outside support [0, " +
                                  std::to_string(t.size()) + ")");
    }
  }
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    enc.encode(table_for(tables, table_index, i), symbols[i]);
  }
  return {enc.finish(), symbol_checksum(symbols)};
}

std::vector<std::int32_t> range_decode(
    std::span<const std::uint8_t> payload, std::uint32_t checksum,
    std::span<const FrequencyTable> tables, std::size_t count,
    std::span<const std::uint32_t> table_index) {
  check_layout(count, tables, table_index);
  RangeDecoder dec(payload);
  std::vector<std::int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dec.decode(table_for(tables, table_index, i));
  }
  dec.finish();
  if (symbol_checksum(out) != checksum) {
    throw CodingError("range decoder: symbol checksum mismatch");
  }
  return out;
}

}  // namespace tsic

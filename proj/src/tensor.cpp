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

#include "tsic/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tsic {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw std::invalid_argument("Tensor: value count does not match shape " +
                                shape_.str());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape shape) {
  if (shape.numel() != data_.size()) {
    throw std::invalid_argument("Tensor::reshape: " + shape_.str() + " -> " +
                                shape.str());
  }
  shape_ = shape;
}

Tensor Tensor::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > shape_.n) {
    throw std::out_of_range("Tensor::slice out of range");
  }
  Shape s = shape_;
  s.n = count;
  Tensor out(s);
  std::memcpy(out.data(), sample(begin), s.numel() * sizeof(double));
  return out;
}

Tensor concat_batch(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  Shape s = parts.front()->shape();
  int total = 0;
  for (const Tensor* p : parts) {
    if (p->c() != s.c || p->h() != s.h || p->w() != s.w) {
      throw std::invalid_argument("concat_batch: mismatched sample shapes");
    }
    total += p->n();
  }
  s.n = total;
  Tensor out(s);
  double* dst = out.data();
  for (const Tensor* p : parts) {
    std::memcpy(dst, p->data(), p->size() * sizeof(double));
    dst += p->size();
  }
  return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_shape(src, dst.shape(), "add_inplace");
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void scale_inplace(Tensor& dst, double s) {
  for (double& v : dst.values()) v *= s;
}

double sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return acc;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_shape(b, a.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace tsic

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

#ifndef TSIC_TENSOR_HPP_
#define TSIC_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsic {

// Dense NCHW shape. Vectors are represented as N x C x 1 x 1.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int h, int w) {
    return data_[index(n, c, h, w)];
  }
  double at(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }

  double* sample(int n) { return data_.data() + n * shape_.sample(); }
  const double* sample(int n) const {
    return data_.data() + n * shape_.sample();
  }
  double* plane(int n, int c) {
    return data_.data() + n * shape_.sample() + c * shape_.plane();
  }
  const double* plane(int n, int c) const {
    return data_.data() + n * shape_.sample() + c * shape_.plane();
  }

  void fill(double v);
  void zero() { fill(0.0); }
  // Reinterprets the buffer; element count must match.
  void reshape(Shape shape);

  // Copy of samples [begin, begin + count).
  Tensor slice(int begin, int count) const;

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Concatenates along the batch axis.
Tensor concat_batch(std::span<const Tensor* const> parts);

void add_inplace(Tensor& dst, const Tensor& src);
void scale_inplace(Tensor& dst, double s);
double sum(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

inline void require_shape(const Tensor& t, const Shape& expected,
                          const char* what) {
  if (t.shape() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected shape " +
                                expected.str() + ", got " + t.shape().str());
  }
}

}  // namespace tsic

#endif  // TSIC_TENSOR_HPP_

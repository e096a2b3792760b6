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

#ifndef TSIC_TESTS_TEST_UTIL_HPP_
#define TSIC_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "tsic/tensor.hpp"

namespace tsic::test {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(s);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Central difference of `f` with respect to `*x`.
inline double numeric_derivative(const std::function<double()>& f, double* x,
                                 double eps = 1e-6) {
  const double keep = *x;
  *x = keep + eps;
  const double up = f();
  *x = keep - eps;
  const double down = f();
  *x = keep;
  return (up - down) / (2.0 * eps);
}

// Relative agreement with an absolute floor for near-zero derivatives.
inline bool grad_close(double analytic, double numeric, double rel = 1e-3,
                       double abs_floor = 1e-7) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return std::abs(analytic - numeric) <= rel * scale + abs_floor;
}

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("tsic_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tsic::test

#endif  // TSIC_TESTS_TEST_UTIL_HPP_

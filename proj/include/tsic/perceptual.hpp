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

#ifndef TSIC_PERCEPTUAL_HPP_
#define TSIC_PERCEPTUAL_HPP_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tsic/tensor.hpp"

namespace tsic {

struct PerceptualResult {
  std::vector<double> per_sample;
  double mean = 0.0;
  Tensor grad;  // d(mean) / d(image); empty unless requested
};

// Distance between a reference batch and an image batch, both [N,3,H,W]
// in [-1, 1]. Lower is better; identical inputs give 0.
class PerceptualAdapter {
 public:
  virtual ~PerceptualAdapter() = default;
  virtual std::string name() const = 0;
  virtual PerceptualResult evaluate(const Tensor& reference,
                                    const Tensor& image,
                                    bool with_grad) const = 0;
};

// Multi-scale structural dissimilarity: sum over scales s of
// w_s * (1 - mean SSIM_s), with 7x7 Gaussian windows (sigma 1.5, valid
// region), 2x2 average pooling between scales, up to three scales while
// the short side is at least 7, and equal weights summing to one.
class MsSsimProxy : public PerceptualAdapter {
 public:
  static constexpr int kMaxScales = 3;
  static constexpr int kWindow = 7;

  std::string name() const override { return "ms_ssim"; }
  PerceptualResult evaluate(const Tensor& reference, const Tensor& image,
                            bool with_grad) const override;
};

// "ms_ssim" is the only built-in adapter.
std::unique_ptr<PerceptualAdapter> make_perceptual_adapter(
    std::string_view name);

}  // namespace tsic

#endif  // TSIC_PERCEPTUAL_HPP_

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

#ifndef TSIC_NN_HPP_
#define TSIC_NN_HPP_

#include <random>
#include <string>
#include <vector>

#include "tsic/kernels.hpp"
#include "tsic/tensor.hpp"

// Layer primitives with hand-written backward passes. Each layer caches
// what its backward needs from the most recent forward call, so a layer
// instance must see forward/backward strictly alternating.
namespace tsic::nn {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Shape s)
      : name(std::move(n)), value(s), grad(s) {}
  void zero_grad() { grad.zero(); }
};

// Parameters (trainable) and buffers (state such as running statistics) of
// a network, in a stable order.
struct ParameterList {
  std::vector<Parameter*> params;
  std::vector<Parameter*> buffers;

  void append(const ParameterList& other);
  void zero_grad();
  std::size_t count() const;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int cin, int cout, ConvGeometry g, Rng& rng,
         double gain = 2.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void collect(ParameterList& out);

  int in_channels() const { return weight_.value.c(); }
  int out_channels() const { return weight_.value.n(); }
  ConvGeometry geometry() const { return geometry_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  ConvGeometry geometry_;
  Tensor input_;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, int cin, int cout, ConvGeometry g,
                  Rng& rng, double gain = 2.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void collect(ParameterList& out);

  int out_channels() const { return weight_.value.c(); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  ConvGeometry geometry_;
  Tensor input_;
};

// Fully connected layer on [N, in, 1, 1] tensors.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng,
         double gain = 1.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);
  void collect(ParameterList& out);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;  // [out, in, 1, 1]
  Parameter bias_;
  Tensor input_;
};

enum class Activation { kRelu, kLeakyRelu, kTanh, kSigmoid, kSilu };

class Act {
 public:
  explicit Act(Activation kind = Activation::kRelu) : kind_(kind) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Activation kind_;
  Tensor input_;
  Tensor output_;
};

// Per-channel normalization without learned affine. Training mode uses
// batch statistics (over N, H, W) and updates the running estimates;
// evaluation mode uses the running estimates.
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, double momentum = 0.1,
              double eps = 1e-5);

  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& gy);
  void collect(ParameterList& out);

  const Tensor& running_mean() const { return running_mean_.value; }
  const Tensor& running_var() const { return running_var_.value; }

 private:
  Parameter running_mean_;
  Parameter running_var_;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  bool last_training_ = true;
  Tensor normalized_;
  std::vector<double> inv_std_;
};

// Per-sample upsampling of an [N, C, h, w] grid to [N, C, h*f, w*f].
Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Tensor& gy, int factor);

// Crops the top-left [h, w] window; backward zero-pads.
Tensor crop(const Tensor& x, int h, int w);
Tensor crop_backward(const Tensor& gy, Shape input);

double sigmoid(double x);
double softplus(double x);

}  // namespace tsic::nn

#endif  // TSIC_NN_HPP_

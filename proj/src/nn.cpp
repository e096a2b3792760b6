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

#include "tsic/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace tsic::nn {
namespace {

void init_normal(Tensor& t, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

void ParameterList::append(const ParameterList& other) {
  params.insert(params.end(), other.params.begin(), other.params.end());
  buffers.insert(buffers.end(), other.buffers.begin(), other.buffers.end());
}

void ParameterList::zero_grad() {
  for (Parameter* p : params) p->zero_grad();
}

std::size_t ParameterList::count() const {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------

Conv2d::Conv2d(const std::string& name, int cin, int cout, ConvGeometry g,
               Rng& rng, double gain)
    : weight_(name + ".weight", {cout, cin, g.kernel, g.kernel}),
      bias_(name + ".bias", {cout, 1, 1, 1}),
      geometry_(g) {
  init_normal(weight_.value, std::sqrt(gain / (cin * g.kernel * g.kernel)),
              rng);
}

Tensor Conv2d::forward(const Tensor& x) {
  input_ = x;
  return kernels::conv2d(x, weight_.value, bias_.value.values(), geometry_);
}

Tensor Conv2d::backward(const Tensor& gy) {
  Tensor gx;
  kernels::conv2d_backward(input_, weight_.value, gy, geometry_, &gx,
                           &weight_.grad, bias_.grad.values());
  return gx;
}

void Conv2d::collect(ParameterList& out) {
  out.params.push_back(&weight_);
  out.params.push_back(&bias_);
}

// ---------------------------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(const std::string& name, int cin, int cout,
                                 ConvGeometry g, Rng& rng, double gain)
    : weight_(name + ".weight", {cin, cout, g.kernel, g.kernel}),
      bias_(name + ".bias", {cout, 1, 1, 1}),
      geometry_(g) {
  const double fan_in =
      static_cast<double>(cin) * g.kernel * g.kernel / (g.stride * g.stride);
  init_normal(weight_.value, std::sqrt(gain / fan_in), rng);
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  input_ = x;
  return kernels::conv_transpose2d(x, weight_.value, bias_.value.values(),
                                   geometry_);
}

Tensor ConvTranspose2d::backward(const Tensor& gy) {
  Tensor gx;
  kernels::conv_transpose2d_backward(input_, weight_.value, gy, geometry_,
                                     &gx, &weight_.grad, bias_.grad.values());
  return gx;
}

void ConvTranspose2d::collect(ParameterList& out) {
  out.params.push_back(&weight_);
  out.params.push_back(&bias_);
}

// ---------------------------------------------------------------------------

Linear::Linear(const std::string& name, int in, int out, Rng& rng,
               double gain)
    : weight_(name + ".weight", {out, in, 1, 1}),
      bias_(name + ".bias", {out, 1, 1, 1}) {
  init_normal(weight_.value, std::sqrt(gain / in), rng);
}

Tensor Linear::forward(const Tensor& x) {
  const int in = weight_.value.c();
  const int out = weight_.value.n();
  if (x.shape().sample() != static_cast<std::size_t>(in)) {
    throw std::invalid_argument("Linear: expected " + std::to_string(in) +
                                " features, got " + x.shape().str());
  }
  input_ = x;
  Tensor y({x.n(), out, 1, 1});
  // y[N x out] = x[N x in] * W[out x in]^T
  kernels::gemm_nt(x.n(), out, in, x.data(), weight_.value.data(), y.data());
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < out; ++o) y.sample(n)[o] += bias_.value[o];
  }
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  const int in = weight_.value.c();
  const int out = weight_.value.n();
  Tensor gx(input_.shape());
  kernels::gemm_nn(gy.n(), in, out, gy.data(), weight_.value.data(), gx.data(),
                   false);
  kernels::gemm_tn(out, in, gy.n(), gy.data(), input_.data(),
                   weight_.grad.data(), true);
  for (int n = 0; n < gy.n(); ++n) {
    for (int o = 0; o < out; ++o) bias_.grad[o] += gy.sample(n)[o];
  }
  return gx;
}

void Linear::collect(ParameterList& out) {
  out.params.push_back(&weight_);
  out.params.push_back(&bias_);
}

// ---------------------------------------------------------------------------

Tensor Act::forward(const Tensor& x) {
  input_ = x;
  Tensor y(x.shape());
  const double* in = x.data();
  double* out = y.data();
  const std::size_t n = x.size();
  switch (kind_) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0 ? in[i] : 0.0;
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] > 0 ? in[i] : 0.2 * in[i];
      }
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(in[i]);
      break;
    case Activation::kSilu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] * sigmoid(in[i]);
      break;
  }
  output_ = y;
  return y;
}

Tensor Act::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  const double* in = input_.data();
  const double* out = output_.data();
  const double* g = gy.data();
  double* d = gx.data();
  const std::size_t n = gy.size();
  switch (kind_) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) d[i] = in[i] > 0 ? g[i] : 0.0;
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < n; ++i) d[i] = in[i] > 0 ? g[i] : 0.2 * g[i];
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] * (1.0 - out[i] * out[i]);
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] * out[i] * (1.0 - out[i]);
      break;
    case Activation::kSilu:
      for (std::size_t i = 0; i < n; ++i) {
        const double s = sigmoid(in[i]);
        d[i] = g[i] * (s + in[i] * s * (1.0 - s));
      }
      break;
  }
  return gx;
}

// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(const std::string& name, int channels,
                         double momentum, double eps)
    : running_mean_(name + ".running_mean", {channels, 1, 1, 1}),
      running_var_(name + ".running_var", {channels, 1, 1, 1}),
      momentum_(momentum),
      eps_(eps) {
  running_var_.value.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  const int channels = running_mean_.value.n();
  if (x.c() != channels) {
    throw std::invalid_argument("BatchNorm2d: expected " +
                                std::to_string(channels) + " channels, got " +
                                x.shape().str());
  }
  last_training_ = training;
  const std::size_t plane = x.shape().plane();
  const double count = static_cast<double>(plane) * x.n();
  normalized_ = Tensor(x.shape());
  inv_std_.assign(channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    double mean, var;
    if (training) {
      double acc = 0.0;
      for (int n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      mean = acc / count;
      double sq = 0.0;
      for (int n = 0; n < x.n(); ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      running_mean_.value[c] =
          (1 - momentum_) * running_mean_.value[c] + momentum_ * mean;
      running_var_.value[c] =
          (1 - momentum_) * running_var_.value[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const double istd = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = istd;
    for (int n = 0; n < x.n(); ++n) {
      const double* p = x.plane(n, c);
      double* o = normalized_.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = (p[i] - mean) * istd;
    }
  }
  return normalized_;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  const std::size_t plane = gy.shape().plane();
  const double count = static_cast<double>(plane) * gy.n();
  for (int c = 0; c < gy.c(); ++c) {
    const double istd = inv_std_[c];
    if (!last_training_) {
      for (int n = 0; n < gy.n(); ++n) {
        const double* g = gy.plane(n, c);
        double* d = gx.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) d[i] = g[i] * istd;
      }
      continue;
    }
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < gy.n(); ++n) {
      const double* g = gy.plane(n, c);
      const double* xh = normalized_.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    for (int n = 0; n < gy.n(); ++n) {
      const double* g = gy.plane(n, c);
      const double* xh = normalized_.plane(n, c);
      double* d = gx.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        d[i] = istd / count * (count * g[i] - sum_g - xh[i] * sum_gx);
      }
    }
  }
  return gx;
}

void BatchNorm2d::collect(ParameterList& out) {
  out.buffers.push_back(&running_mean_);
  out.buffers.push_back(&running_var_);
}

// ---------------------------------------------------------------------------

Tensor upsample_nearest(const Tensor& x, int factor) {
  Tensor y({x.n(), x.c(), x.h() * factor, x.w() * factor});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double* src = x.plane(n, c);
      double* dst = y.plane(n, c);
      for (int oy = 0; oy < y.h(); ++oy) {
        for (int ox = 0; ox < y.w(); ++ox) {
          dst[oy * y.w() + ox] = src[(oy / factor) * x.w() + ox / factor];
        }
      }
    }
  }
  return y;
}

Tensor upsample_nearest_backward(const Tensor& gy, int factor) {
  Tensor gx({gy.n(), gy.c(), gy.h() / factor, gy.w() / factor});
  for (int n = 0; n < gy.n(); ++n) {
    for (int c = 0; c < gy.c(); ++c) {
      const double* src = gy.plane(n, c);
      double* dst = gx.plane(n, c);
      for (int oy = 0; oy < gy.h(); ++oy) {
        for (int ox = 0; ox < gy.w(); ++ox) {
          dst[(oy / factor) * gx.w() + ox / factor] += src[oy * gy.w() + ox];
        }
      }
    }
  }
  return gx;
}

Tensor crop(const Tensor& x, int h, int w) {
  if (h > x.h() || w > x.w()) throw std::invalid_argument("crop: too large");
  if (h == x.h() && w == x.w()) return x;
  Tensor y({x.n(), x.c(), h, w});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) y.at(n, c, r, col) = x.at(n, c, r, col);
      }
    }
  }
  return y;
}

Tensor crop_backward(const Tensor& gy, Shape input) {
  if (gy.shape() == input) return gy;
  Tensor gx(input);
  for (int n = 0; n < gy.n(); ++n) {
    for (int c = 0; c < gy.c(); ++c) {
      for (int r = 0; r < gy.h(); ++r) {
        for (int col = 0; col < gy.w(); ++col) {
          gx.at(n, c, r, col) = gy.at(n, c, r, col);
        }
      }
    }
  }
  return gx;
}

}  // namespace tsic::nn

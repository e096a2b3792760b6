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

#include <cstring>
#include <stdexcept>
#include <vector>

#include "tsic/kernels.hpp"

namespace tsic {

int conv_out_size(int in, ConvGeometry g) {
  return (in + 2 * g.pad - g.kernel) / g.stride + 1;
}

int conv_transpose_out_size(int in, ConvGeometry g) {
  return (in - 1) * g.stride - 2 * g.pad + g.kernel;
}

namespace kernels {
namespace {

bool is_pointwise(ConvGeometry g) {
  return g.kernel == 1 && g.stride == 1 && g.pad == 0;
}

// Unfolds an image (channels x img_h x img_w) into columns indexed by the
// sliding-window grid (grid_h x grid_w).
void im2col(const double* img, int channels, int img_h, int img_w,
            ConvGeometry g, int grid_h, int grid_w, double* col) {
  const int k = g.kernel;
  const long grid = static_cast<long>(grid_h) * grid_w;
#pragma omp parallel for schedule(static) num_threads(kernel_threads()) \
    if (channels * grid * k * k >= (1L << 16))
  for (int c = 0; c < channels; ++c) {
    const double* plane = img + static_cast<long>(c) * img_h * img_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + ((static_cast<long>(c) * k + ky) * k + kx) * grid;
        for (int oy = 0; oy < grid_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + static_cast<long>(oy) * grid_w;
          if (iy < 0 || iy >= img_h) {
            std::memset(dst, 0, sizeof(double) * grid_w);
            continue;
          }
          const double* src = plane + static_cast<long>(iy) * img_w;
          for (int ox = 0; ox < grid_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < img_w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col; overwrites img.
void col2im(const double* col, int channels, int img_h, int img_w,
            ConvGeometry g, int grid_h, int grid_w, double* img) {
  const int k = g.kernel;
  const long grid = static_cast<long>(grid_h) * grid_w;
  std::memset(img, 0, sizeof(double) * channels * img_h * img_w);
#pragma omp parallel for schedule(static) num_threads(kernel_threads()) \
    if (channels * grid * k * k >= (1L << 16))
  for (int c = 0; c < channels; ++c) {
    double* plane = img + static_cast<long>(c) * img_h * img_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row =
            col + ((static_cast<long>(c) * k + ky) * k + kx) * grid;
        for (int oy = 0; oy < grid_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= img_h) continue;
          const double* src = row + static_cast<long>(oy) * grid_w;
          double* dst = plane + static_cast<long>(iy) * img_w;
          for (int ox = 0; ox < grid_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < img_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void add_bias(Tensor& y, std::span<const double> bias) {
  if (bias.empty()) return;
  if (static_cast<int>(bias.size()) != y.c()) {
    throw std::invalid_argument("conv: bias length does not match channels");
  }
  const std::size_t plane = y.shape().plane();
  for (int n = 0; n < y.n(); ++n) {
    for (int c = 0; c < y.c(); ++c) {
      double* p = y.plane(n, c);
      const double b = bias[c];
      for (std::size_t i = 0; i < plane; ++i) p[i] += b;
    }
  }
}

void accumulate_bias_grad(const Tensor& gy, std::span<double> gb) {
  if (gb.empty()) return;
  const std::size_t plane = gy.shape().plane();
  for (int n = 0; n < gy.n(); ++n) {
    for (int c = 0; c < gy.c(); ++c) {
      const double* p = gy.plane(n, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      gb[c] += acc;
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight,
              std::span<const double> bias, ConvGeometry g) {
  const int cout = weight.n();
  const int cin = weight.c();
  if (x.c() != cin || weight.h() != g.kernel || weight.w() != g.kernel) {
    throw std::invalid_argument("conv2d: input " + x.shape().str() +
                                " incompatible with weight " +
                                weight.shape().str());
  }
  const int ho = conv_out_size(x.h(), g);
  const int wo = conv_out_size(x.w(), g);
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv2d: empty output");
  Tensor y({x.n(), cout, ho, wo});
  const int kdim = cin * g.kernel * g.kernel;
  const int grid = ho * wo;
  const bool direct = is_pointwise(g);
  std::vector<double> col(direct ? 0 : static_cast<std::size_t>(kdim) * grid);
  for (int n = 0; n < x.n(); ++n) {
    const double* src = x.sample(n);
    if (!direct) {
      im2col(src, cin, x.h(), x.w(), g, ho, wo, col.data());
      src = col.data();
    }
    gemm_nn(cout, grid, kdim, weight.data(), src, y.sample(n), false);
  }
  add_bias(y, bias);
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& gy,
                     ConvGeometry g, Tensor* gx, Tensor* gw,
                     std::span<double> gb) {
  const int cout = weight.n();
  const int cin = weight.c();
  const int ho = gy.h();
  const int wo = gy.w();
  const int kdim = cin * g.kernel * g.kernel;
  const int grid = ho * wo;
  const bool direct = is_pointwise(g);
  std::vector<double> col(direct ? 0 : static_cast<std::size_t>(kdim) * grid);
  std::vector<double> gcol(static_cast<std::size_t>(kdim) * grid);
  if (gx != nullptr && gx->shape() != x.shape()) *gx = Tensor(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    const double* g_n = gy.sample(n);
    if (gw != nullptr) {
      const double* src = x.sample(n);
      if (!direct) {
        im2col(src, cin, x.h(), x.w(), g, ho, wo, col.data());
        src = col.data();
      }
      gemm_nt(cout, kdim, grid, g_n, src, gw->data());
    }
    if (gx != nullptr) {
      if (direct) {
        gemm_tn(kdim, grid, cout, weight.data(), g_n, gx->sample(n), false);
      } else {
        gemm_tn(kdim, grid, cout, weight.data(), g_n, gcol.data(), false);
        col2im(gcol.data(), cin, x.h(), x.w(), g, ho, wo, gx->sample(n));
      }
    }
  }
  accumulate_bias_grad(gy, gb);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight,
                        std::span<const double> bias, ConvGeometry g) {
  const int cin = weight.n();
  const int cout = weight.c();
  if (x.c() != cin || weight.h() != g.kernel || weight.w() != g.kernel) {
    throw std::invalid_argument("conv_transpose2d: input " + x.shape().str() +
                                " incompatible with weight " +
                                weight.shape().str());
  }
  const int ho = conv_transpose_out_size(x.h(), g);
  const int wo = conv_transpose_out_size(x.w(), g);
  Tensor y({x.n(), cout, ho, wo});
  const int kdim = cout * g.kernel * g.kernel;
  const int grid = x.h() * x.w();
  std::vector<double> col(static_cast<std::size_t>(kdim) * grid);
  for (int n = 0; n < x.n(); ++n) {
    gemm_tn(kdim, grid, cin, weight.data(), x.sample(n), col.data(), false);
    col2im(col.data(), cout, ho, wo, g, x.h(), x.w(), y.sample(n));
  }
  add_bias(y, bias);
  return y;
}

void conv_transpose2d_backward(const Tensor& x, const Tensor& weight,
                               const Tensor& gy, ConvGeometry g, Tensor* gx,
                               Tensor* gw, std::span<double> gb) {
  const int cin = weight.n();
  const int cout = weight.c();
  const int kdim = cout * g.kernel * g.kernel;
  const int grid = x.h() * x.w();
  std::vector<double> col(static_cast<std::size_t>(kdim) * grid);
  if (gx != nullptr && gx->shape() != x.shape()) *gx = Tensor(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    im2col(gy.sample(n), cout, gy.h(), gy.w(), g, x.h(), x.w(), col.data());
    if (gx != nullptr) {
      gemm_nn(cin, grid, kdim, weight.data(), col.data(), gx->sample(n),
              false);
    }
    if (gw != nullptr) {
      gemm_nt(cin, kdim, grid, x.sample(n), col.data(), gw->data());
    }
  }
  accumulate_bias_grad(gy, gb);
}

}  // namespace kernels
}  // namespace tsic

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

#include <stdexcept>

#include "tsic/kernels.hpp"

namespace tsic::reference {

Tensor conv2d(const Tensor& x, const Tensor& weight,
              std::span<const double> bias, ConvGeometry g) {
  if (x.c() != weight.c()) throw std::invalid_argument("conv2d: channels");
  const int ho = conv_out_size(x.h(), g);
  const int wo = conv_out_size(x.w(), g);
  Tensor y({x.n(), weight.n(), ho, wo});
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < weight.n(); ++co) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (int ci = 0; ci < x.c(); ++ci) {
            for (int ky = 0; ky < g.kernel; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= x.h()) continue;
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= x.w()) continue;
                acc += weight.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
            }
          }
          y.at(n, co, oy, ox) = acc;
        }
      }
    }
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& gy,
                     ConvGeometry g, Tensor* gx, Tensor* gw,
                     std::span<double> gb) {
  if (gx != nullptr) *gx = Tensor(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < weight.n(); ++co) {
      for (int oy = 0; oy < gy.h(); ++oy) {
        for (int ox = 0; ox < gy.w(); ++ox) {
          const double go = gy.at(n, co, oy, ox);
          if (!gb.empty()) gb[co] += go;
          for (int ci = 0; ci < x.c(); ++ci) {
            for (int ky = 0; ky < g.kernel; ++ky) {
              const int iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= x.h()) continue;
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= x.w()) continue;
                if (gx != nullptr) {
                  gx->at(n, ci, iy, ix) += weight.at(co, ci, ky, kx) * go;
                }
                if (gw != nullptr) {
                  gw->at(co, ci, ky, kx) += x.at(n, ci, iy, ix) * go;
                }
              }
            }
          }
        }
      }
    }
  }
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight,
                        std::span<const double> bias, ConvGeometry g) {
  if (x.c() != weight.n()) {
    throw std::invalid_argument("conv_transpose2d: channels");
  }
  const int ho = conv_transpose_out_size(x.h(), g);
  const int wo = conv_transpose_out_size(x.w(), g);
  Tensor y({x.n(), weight.c(), ho, wo});
  for (int n = 0; n < x.n(); ++n) {
    for (int co = 0; co < weight.c(); ++co) {
      const double b = bias.empty() ? 0.0 : bias[co];
      for (int i = 0; i < ho * wo; ++i) y.plane(n, co)[i] = b;
    }
    for (int ci = 0; ci < x.c(); ++ci) {
      for (int iy = 0; iy < x.h(); ++iy) {
        for (int ix = 0; ix < x.w(); ++ix) {
          const double v = x.at(n, ci, iy, ix);
          for (int co = 0; co < weight.c(); ++co) {
            for (int ky = 0; ky < g.kernel; ++ky) {
              const int oy = iy * g.stride - g.pad + ky;
              if (oy < 0 || oy >= ho) continue;
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ox = ix * g.stride - g.pad + kx;
                if (ox < 0 || ox >= wo) continue;
                y.at(n, co, oy, ox) += weight.at(ci, co, ky, kx) * v;
              }
            }
          }
        }
      }
    }
  }
  return y;
}

void conv_transpose2d_backward(const Tensor& x, const Tensor& weight,
                               const Tensor& gy, ConvGeometry g, Tensor* gx,
                               Tensor* gw, std::span<double> gb) {
  if (gx != nullptr) *gx = Tensor(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int ci = 0; ci < x.c(); ++ci) {
      for (int iy = 0; iy < x.h(); ++iy) {
        for (int ix = 0; ix < x.w(); ++ix) {
          for (int co = 0; co < weight.c(); ++co) {
            for (int ky = 0; ky < g.kernel; ++ky) {
              const int oy = iy * g.stride - g.pad + ky;
              if (oy < 0 || oy >= gy.h()) continue;
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int ox = ix * g.stride - g.pad + kx;
                if (ox < 0 || ox >= gy.w()) continue;
                const double go = gy.at(n, co, oy, ox);
                if (gx != nullptr) {
                  gx->at(n, ci, iy, ix) += weight.at(ci, co, ky, kx) * go;
                }
                if (gw != nullptr) {
                  gw->at(ci, co, ky, kx) += x.at(n, ci, iy, ix) * go;
                }
              }
            }
          }
        }
      }
    }
    if (!gb.empty()) {
      for (int co = 0; co < gy.c(); ++co) {
        for (int i = 0; i < gy.h() * gy.w(); ++i) gb[co] += gy.plane(n, co)[i];
      }
    }
  }
}

}  // namespace tsic::reference

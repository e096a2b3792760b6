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

#include "tsic/perceptual.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace tsic {

namespace {

// Constants for a dynamic range of 2.
constexpr double kC1 = (0.01 * 2.0) * (0.01 * 2.0);
constexpr double kC2 = (0.03 * 2.0) * (0.03 * 2.0);

using Plane = std::vector<double>;

const std::array<double, MsSsimProxy::kWindow>& window() {
  static const auto w = [] {
    std::array<double, MsSsimProxy::kWindow> k{};
    double s = 0.0;
    for (int i = 0; i < MsSsimProxy::kWindow; ++i) {
      const double d = i - MsSsimProxy::kWindow / 2;
      k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      s += k[i];
    }
    for (double& v : k) v /= s;
    return k;
  }();
  return w;
}

// Separable valid filtering of an h x w plane.
Plane filter(const Plane& in, int h, int w) {
  const auto& k = window();
  const int K = MsSsimProxy::kWindow;
  const int oh = h - K + 1, ow = w - K + 1;
  Plane rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double a = 0.0;
      for (int t = 0; t < K; ++t) a += k[t] * in[y * w + x + t];
      rows[y * ow + x] = a;
    }
  }
  Plane out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double a = 0.0;
      for (int t = 0; t < K; ++t) a += k[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = a;
    }
  }
  return out;
}

// Adjoint of filter().
Plane filter_transpose(const Plane& g, int h, int w) {
  const auto& k = window();
  const int K = MsSsimProxy::kWindow;
  const int oh = h - K + 1, ow = w - K + 1;
  Plane rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double v = g[y * ow + x];
      for (int t = 0; t < K; ++t) rows[(y + t) * ow + x] += k[t] * v;
    }
  }
  Plane out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double v = rows[y * ow + x];
      for (int t = 0; t < K; ++t) out[y * w + x + t] += k[t] * v;
    }
  }
  return out;
}

Plane pool(const Plane& in, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  Plane out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      out[y * ow + x] = 0.25 * (in[2 * y * w + 2 * x] + in[2 * y * w + 2 * x + 1] +
                                in[(2 * y + 1) * w + 2 * x] +
                                in[(2 * y + 1) * w + 2 * x + 1]);
    }
  }
  return out;
}

void unpool_add(const Plane& g, int h, int w, Plane& out) {
  const int oh = h / 2, ow = w / 2;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double v = 0.25 * g[y * ow + x];
      out[2 * y * w + 2 * x] += v;
      out[2 * y * w + 2 * x + 1] += v;
      out[(2 * y + 1) * w + 2 * x] += v;
      out[(2 * y + 1) * w + 2 * x + 1] += v;
    }
  }
}

struct ScaleGeometry {
  int h, w;
};

std::vector<ScaleGeometry> scales_for(int h, int w) {
  std::vector<ScaleGeometry> s;
  while (static_cast<int>(s.size()) < MsSsimProxy::kMaxScales &&
         std::min(h, w) >= MsSsimProxy::kWindow) {
    s.push_back({h, w});
    h /= 2;
    w /= 2;
  }
  return s;
}

// Mean SSIM over one plane; when `grad` is non-null, adds
// d(mean SSIM)/dY * scale to it.
double ssim_plane(const Plane& X, const Plane& Y, int h, int w, double scale,
                  Plane* grad) {
  Plane xx(X.size()), yy(Y.size()), xy(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    xx[i] = X[i] * X[i];
    yy[i] = Y[i] * Y[i];
    xy[i] = X[i] * Y[i];
  }
  const Plane mx = filter(X, h, w), my = filter(Y, h, w);
  const Plane fxx = filter(xx, h, w), fyy = filter(yy, h, w),
              fxy = filter(xy, h, w);
  const std::size_t m = mx.size();
  const double inv = 1.0 / static_cast<double>(m);
  Plane g_my, g_fyy, g_fxy;
  if (grad) {
    g_my.resize(m);
    g_fyy.resize(m);
    g_fxy.resize(m);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sxx = fxx[i] - mx[i] * mx[i];
    const double syy = fyy[i] - my[i] * my[i];
    const double sxy = fxy[i] - mx[i] * my[i];
    const double a1 = 2.0 * mx[i] * my[i] + kC1;
    const double a2 = 2.0 * sxy + kC2;
    const double b1 = mx[i] * mx[i] + my[i] * my[i] + kC1;
    const double b2 = sxx + syy + kC2;
    const double s = a1 * a2 / (b1 * b2);
    total += s;
    if (grad) {
      const double g = scale * inv;
      g_my[i] = g * ((2.0 * mx[i] * a2 - 2.0 * mx[i] * a1) / (b1 * b2) -
                     s * (2.0 * my[i] / b1 - 2.0 * my[i] / b2));
      g_fyy[i] = g * (-s / b2);
      g_fxy[i] = g * (2.0 * a1 / (b1 * b2));
    }
  }
  if (grad) {
    const Plane t_my = filter_transpose(g_my, h, w);
    const Plane t_fyy = filter_transpose(g_fyy, h, w);
    const Plane t_fxy = filter_transpose(g_fxy, h, w);
    for (std::size_t i = 0; i < Y.size(); ++i) {
      (*grad)[i] += t_my[i] + 2.0 * Y[i] * t_fyy[i] + X[i] * t_fxy[i];
    }
  }
  return total * inv;
}

}  // namespace

PerceptualResult MsSsimProxy::evaluate(const Tensor& reference,
                                       const Tensor& image,
                                       bool with_grad) const {
  require_shape(image, reference.shape(), "perceptual proxy");
  const auto scales = scales_for(image.h(), image.w());
  if (scales.empty()) {
    throw std::invalid_argument("perceptual proxy: image smaller than 7x7");
  }
  const double weight = 1.0 / static_cast<double>(scales.size());
  const int n_samples = image.n();
  const int channels = image.c();
  PerceptualResult r;
  r.per_sample.assign(n_samples, 0.0);
  if (with_grad) r.grad = Tensor(image.shape());
  const std::size_t plane = image.shape().plane();
  for (int n = 0; n < n_samples; ++n) {
    for (int c = 0; c < channels; ++c) {
      std::vector<Plane> xs{Plane(reference.plane(n, c),
                                  reference.plane(n, c) + plane)};
      std::vector<Plane> ys{Plane(image.plane(n, c), image.plane(n, c) + plane)};
      for (std::size_t s = 1; s < scales.size(); ++s) {
        xs.push_back(pool(xs.back(), scales[s - 1].h, scales[s - 1].w));
        ys.push_back(pool(ys.back(), scales[s - 1].h, scales[s - 1].w));
      }
      // d(mean over batch)/d(ssim) for this plane.
      const double g_scale = -weight / (channels * n_samples);
      std::vector<Plane> grads;
      if (with_grad) {
        for (const auto& g : scales) grads.emplace_back(g.h * g.w, 0.0);
      }
      for (std::size_t s = 0; s < scales.size(); ++s) {
        const double v =
            ssim_plane(xs[s], ys[s], scales[s].h, scales[s].w, g_scale,
                       with_grad ? &grads[s] : nullptr);
        r.per_sample[n] += weight * (1.0 - v) / channels;
      }
      if (with_grad) {
        for (std::size_t s = scales.size() - 1; s > 0; --s) {
          unpool_add(grads[s], scales[s - 1].h, scales[s - 1].w, grads[s - 1]);
        }
        std::copy(grads[0].begin(), grads[0].end(), r.grad.plane(n, c));
      }
    }
  }
  for (double v : r.per_sample) r.mean += v;
  r.mean /= n_samples;
  return r;
}

std::unique_ptr<PerceptualAdapter> make_perceptual_adapter(
    std::string_view name) {
  if (name == "ms_ssim") return std::make_unique<MsSsimProxy>();
  throw std::invalid_argument("unknown perceptual adapter '" +
                              std::string(name) + "' (available: ms_ssim)");
}

}  // namespace tsic

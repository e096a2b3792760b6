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

// Compares the parallel im2col/GEMM convolution against the serial direct
// reference on the layer shapes the codec actually runs.

#include <random>

#include <benchmark/benchmark.h>

#include "tsic/kernels.hpp"

namespace {

tsic::Tensor random_tensor(tsic::Shape s) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  tsic::Tensor t(s);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// args: batch, cin, cout, spatial, stride
template <bool kReference>
void BM_Conv3x3(benchmark::State& state) {
  const int n = state.range(0), cin = state.range(1), cout = state.range(2);
  const int hw = state.range(3), stride = state.range(4);
  const tsic::ConvGeometry g{3, stride, 1};
  auto x = random_tensor({n, cin, hw, hw});
  auto w = random_tensor({cout, cin, 3, 3});
  for (auto _ : state) {
    auto y = kReference ? tsic::reference::conv2d(x, w, {}, g)
                        : tsic::kernels::conv2d(x, w, {}, g);
    benchmark::DoNotOptimize(y.data());
  }
  const double macs = static_cast<double>(n) * cout * cin * 9 *
                      tsic::conv_out_size(hw, g) * tsic::conv_out_size(hw, g);
  state.counters["GMAC/s"] =
      benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

template <bool kReference>
void BM_Conv3x3Backward(benchmark::State& state) {
  const int n = state.range(0), cin = state.range(1), cout = state.range(2);
  const int hw = state.range(3), stride = state.range(4);
  const tsic::ConvGeometry g{3, stride, 1};
  auto x = random_tensor({n, cin, hw, hw});
  auto w = random_tensor({cout, cin, 3, 3});
  const int ho = tsic::conv_out_size(hw, g);
  auto gy = random_tensor({n, cout, ho, ho});
  tsic::Tensor gw(w.shape());
  for (auto _ : state) {
    tsic::Tensor gx;
    if (kReference) {
      tsic::reference::conv2d_backward(x, w, gy, g, &gx, &gw, {});
    } else {
      tsic::kernels::conv2d_backward(x, w, gy, g, &gx, &gw, {});
    }
    benchmark::DoNotOptimize(gx.data());
  }
  const double macs = 2.0 * n * cout * cin * 9 * ho * ho;
  state.counters["GMAC/s"] =
      benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

template <bool kReference>
void BM_ConvTranspose4x4(benchmark::State& state) {
  const int n = state.range(0), cin = state.range(1), cout = state.range(2);
  const int hw = state.range(3);
  const tsic::ConvGeometry g{4, 2, 1};
  auto x = random_tensor({n, cin, hw, hw});
  auto w = random_tensor({cin, cout, 4, 4});
  for (auto _ : state) {
    auto y = kReference ? tsic::reference::conv_transpose2d(x, w, {}, g)
                        : tsic::kernels::conv_transpose2d(x, w, {}, g);
    benchmark::DoNotOptimize(y.data());
  }
  const double macs = static_cast<double>(n) * cout * cin * 16 * hw * hw;
  state.counters["GMAC/s"] =
      benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

void ConvShapes(benchmark::internal::Benchmark* b) {
  b->Args({8, 3, 32, 64, 1});
  b->Args({8, 32, 32, 64, 2});
  b->Args({8, 32, 32, 16, 1});
  b->Unit(benchmark::kMillisecond);
}

void TransposeShapes(benchmark::internal::Benchmark* b) {
  b->Args({8, 32, 32, 16});
  b->Args({8, 32, 16, 32});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_Conv3x3, false)->Apply(ConvShapes);
BENCHMARK_TEMPLATE(BM_Conv3x3, true)->Apply(ConvShapes);
BENCHMARK_TEMPLATE(BM_Conv3x3Backward, false)->Apply(ConvShapes);
BENCHMARK_TEMPLATE(BM_Conv3x3Backward, true)->Apply(ConvShapes);
BENCHMARK_TEMPLATE(BM_ConvTranspose4x4, false)->Apply(TransposeShapes);
BENCHMARK_TEMPLATE(BM_ConvTranspose4x4, true)->Apply(TransposeShapes);

BENCHMARK_MAIN();

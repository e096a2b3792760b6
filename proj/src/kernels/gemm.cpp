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

#include <algorithm>
#include <cstring>
#include <vector>

#include <omp.h>

#include "tsic/kernels.hpp"

namespace tsic {
namespace {

int g_threads = 0;

constexpr int kColumnBlock = 256;
constexpr long kParallelWork = 1L << 15;

// Four rows of C share each streamed row of B.
inline void rows4(int n, int k, const double* a, const double* b, double* c,
                  int j0, int j1) {
  const double* a0 = a;
  const double* a1 = a + k;
  const double* a2 = a + 2 * k;
  const double* a3 = a + 3 * k;
  double* c0 = c;
  double* c1 = c + n;
  double* c2 = c + 2 * n;
  double* c3 = c + 3 * n;
  for (int p = 0; p < k; ++p) {
    const double* __restrict bp = b + static_cast<long>(p) * n;
    const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
    for (int j = j0; j < j1; ++j) {
      const double bv = bp[j];
      c0[j] += v0 * bv;
      c1[j] += v1 * bv;
      c2[j] += v2 * bv;
      c3[j] += v3 * bv;
    }
  }
}

inline void row1(int n, int k, const double* a, const double* b, double* c,
                 int j0, int j1) {
  for (int p = 0; p < k; ++p) {
    const double* __restrict bp = b + static_cast<long>(p) * n;
    const double v = a[p];
    for (int j = j0; j < j1; ++j) c[j] += v * bp[j];
  }
}

void transpose(int rows, int cols, const double* src, double* dst) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      dst[static_cast<long>(c) * rows + r] = src[static_cast<long>(r) * cols + c];
    }
  }
}

}  // namespace

void set_kernel_threads(int threads) { g_threads = threads; }

int kernel_threads() {
  return g_threads > 0 ? g_threads : omp_get_max_threads();
}

namespace kernels {

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  if (m == 0 || n == 0 || k == 0) return;
  const int blocks = (m + 3) / 4;
  const bool parallel = static_cast<long>(m) * n * k >= kParallelWork;
#pragma omp parallel for schedule(static) num_threads(kernel_threads()) \
    if (parallel)
  for (int blk = 0; blk < blocks; ++blk) {
    const int i0 = blk * 4;
    const int rows = std::min(4, m - i0);
    const double* ai = a + static_cast<long>(i0) * k;
    double* ci = c + static_cast<long>(i0) * n;
    for (int j0 = 0; j0 < n; j0 += kColumnBlock) {
      const int j1 = std::min(n, j0 + kColumnBlock);
      if (rows == 4) {
        rows4(n, k, ai, b, ci, j0, j1);
      } else {
        for (int r = 0; r < rows; ++r) {
          row1(n, k, ai + static_cast<long>(r) * k, b,
               ci + static_cast<long>(r) * n, j0, j1);
        }
      }
    }
  }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b,
             double* c) {
  std::vector<double> bt(static_cast<std::size_t>(n) * k);
  transpose(n, k, b, bt.data());
  gemm_nn(m, n, k, a, bt.data(), c, true);
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate) {
  std::vector<double> at(static_cast<std::size_t>(m) * k);
  transpose(k, m, a, at.data());
  gemm_nn(m, n, k, at.data(), b, c, accumulate);
}

}  // namespace kernels
}  // namespace tsic

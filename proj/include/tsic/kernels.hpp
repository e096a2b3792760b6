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

#ifndef TSIC_KERNELS_HPP_
#define TSIC_KERNELS_HPP_

#include <span>

#include "tsic/tensor.hpp"

// Convolution kernels. The `kernels` namespace holds the OpenMP-parallel
// im2col/GEMM path used everywhere; `reference` holds direct serial loops
// kept as the test oracle. Both produce results that do not depend on the
// thread count: every output element is reduced in a fixed order.
namespace tsic {

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

int conv_out_size(int in, ConvGeometry g);
int conv_transpose_out_size(int in, ConvGeometry g);

namespace kernels {

// C[MxN] (+)= A[MxK] * B[KxN], row-major.
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate);
// C[MxN] += A[MxK] * B[NxK]^T.
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
// C[MxN] (+)= A[KxM]^T * B[KxN].
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate);

// Weights [Cout, Cin, k, k]; bias may be empty.
Tensor conv2d(const Tensor& x, const Tensor& weight,
              std::span<const double> bias, ConvGeometry g);
// gx is overwritten when non-null; gw and gb accumulate.
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& gy,
                     ConvGeometry g, Tensor* gx, Tensor* gw,
                     std::span<double> gb);

// Weights [Cin, Cout, k, k] (the adjoint of conv2d).
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight,
                        std::span<const double> bias, ConvGeometry g);
void conv_transpose2d_backward(const Tensor& x, const Tensor& weight,
                               const Tensor& gy, ConvGeometry g, Tensor* gx,
                               Tensor* gw, std::span<double> gb);

}  // namespace kernels

namespace reference {

Tensor conv2d(const Tensor& x, const Tensor& weight,
              std::span<const double> bias, ConvGeometry g);
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& gy,
                     ConvGeometry g, Tensor* gx, Tensor* gw,
                     std::span<double> gb);
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight,
                        std::span<const double> bias, ConvGeometry g);
void conv_transpose2d_backward(const Tensor& x, const Tensor& weight,
                               const Tensor& gy, ConvGeometry g, Tensor* gx,
                               Tensor* gw, std::span<double> gb);

}  // namespace reference

// Caps the OpenMP team size; 0 restores the runtime default.
void set_kernel_threads(int threads);
int kernel_threads();

}  // namespace tsic

#endif  // TSIC_KERNELS_HPP_

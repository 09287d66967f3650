/* Copyright 2026 The spinqoc Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#define SPINQOC_X86 1
#else
#define SPINQOC_X86 0
#endif

namespace spinqoc::kernels::detail {

void cmatmul_scalar(int n, const double* ar, const double* ai, const double* br,
                    const double* bi, double* cr, double* ci);
double dot_scalar(std::size_t len, const double* x, const double* y);
void axpy_scalar(std::size_t len, double a, const double* x, double* y);
void cgemv_scalar(int rows, int cols, const double* kr, const double* ki,
                  const double* xr, const double* xi, double* yr, double* yi);
void cmul_pointwise_scalar(std::size_t len, double* x, const double* t);

#if SPINQOC_X86
void cmatmul_avx2(int n, const double* ar, const double* ai, const double* br,
                  const double* bi, double* cr, double* ci);
double dot_avx2(std::size_t len, const double* x, const double* y);
void axpy_avx2(std::size_t len, double a, const double* x, double* y);
void cgemv_avx2(int rows, int cols, const double* kr, const double* ki,
                const double* xr, const double* xi, double* yr, double* yi);
void cmul_pointwise_avx2(std::size_t len, double* x, const double* t);
#endif

}  // namespace spinqoc::kernels::detail

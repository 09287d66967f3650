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

// Arithmetic inner loops used by the propagator and the distortion operator.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant compiled with a function-level target attribute. The variant is
// picked once at startup from CPUID; SPINQOC_KERNELS=scalar in the
// environment forces the reference path.
//
// Complex data uses split storage: real and imaginary parts live in separate
// row-major arrays. Matrix kernels take the dimension n and assume packed rows
// (stride n).

#include <cstddef>
#include <string_view>

namespace spinqoc::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // C = A * B for n x n complex matrices. C must not alias A or B.
  void (*cmatmul)(int n, const double* ar, const double* ai, const double* br,
                  const double* bi, double* cr, double* ci);
  // sum_i x[i] * y[i]
  double (*dot)(std::size_t len, const double* x, const double* y);
  // y += a * x
  void (*axpy)(std::size_t len, double a, const double* x, double* y);
  // y = K x for a rows x cols complex matrix K stored column-major.
  void (*cgemv)(int rows, int cols, const double* kr, const double* ki,
                const double* xr, const double* xi, double* yr, double* yi);
  // x[i] *= t[i] on interleaved (re, im) complex arrays of len elements.
  void (*cmul_pointwise)(std::size_t len, double* x, const double* t);
};

const KernelTable& scalar_table();
// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

// Table chosen for this process.
const KernelTable& active();
// Overrides the automatic choice; returns false if the ISA is unavailable.
bool select(Isa isa);
bool cpu_has_avx2();

std::string_view isa_name(Isa isa);

}  // namespace spinqoc::kernels

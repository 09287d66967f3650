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

#include "kernels_impl.hpp"

#if SPINQOC_X86

#include <immintrin.h>

#define SPINQOC_AVX2 __attribute__((target("avx2,fma")))

namespace spinqoc::kernels::detail {

namespace {

SPINQOC_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

// Each output row is built four columns at a time: broadcast A(i,k) and
// accumulate against row k of B.
SPINQOC_AVX2 void cmatmul_avx2(int n, const double* ar, const double* ai,
                               const double* br, const double* bi, double* cr,
                               double* ci) {
  if (n % 4 != 0) {
    cmatmul_scalar(n, ar, ai, br, bi, cr, ci);
    return;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; j += 4) {
      __m256d acc_r = _mm256_setzero_pd();
      __m256d acc_i = _mm256_setzero_pd();
      for (int k = 0; k < n; ++k) {
        const __m256d xr = _mm256_broadcast_sd(ar + i * n + k);
        const __m256d xi = _mm256_broadcast_sd(ai + i * n + k);
        const __m256d yr = _mm256_loadu_pd(br + k * n + j);
        const __m256d yi = _mm256_loadu_pd(bi + k * n + j);
        acc_r = _mm256_fmadd_pd(xr, yr, acc_r);
        acc_r = _mm256_fnmadd_pd(xi, yi, acc_r);
        acc_i = _mm256_fmadd_pd(xr, yi, acc_i);
        acc_i = _mm256_fmadd_pd(xi, yr, acc_i);
      }
      _mm256_storeu_pd(cr + i * n + j, acc_r);
      _mm256_storeu_pd(ci + i * n + j, acc_i);
    }
  }
}

SPINQOC_AVX2 double dot_avx2(std::size_t len, const double* x, const double* y) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= len; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < len; ++i) s += x[i] * y[i];
  return s;
}

SPINQOC_AVX2 void axpy_avx2(std::size_t len, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < len; ++i) y[i] += a * x[i];
}

SPINQOC_AVX2 void cgemv_avx2(int rows, int cols, const double* kr, const double* ki,
                             const double* xr, const double* xi, double* yr,
                             double* yi) {
  for (int r = 0; r < rows; ++r) {
    yr[r] = 0.0;
    yi[r] = 0.0;
  }
  const int vec_rows = rows - rows % 4;
  for (int c = 0; c < cols; ++c) {
    const double* colr = kr + static_cast<std::size_t>(c) * rows;
    const double* coli = ki + static_cast<std::size_t>(c) * rows;
    const __m256d vr = _mm256_set1_pd(xr[c]);
    const __m256d vi = _mm256_set1_pd(xi[c]);
    int r = 0;
    for (; r < vec_rows; r += 4) {
      const __m256d mr = _mm256_loadu_pd(colr + r);
      const __m256d mi = _mm256_loadu_pd(coli + r);
      __m256d accr = _mm256_loadu_pd(yr + r);
      __m256d acci = _mm256_loadu_pd(yi + r);
      accr = _mm256_fmadd_pd(mr, vr, accr);
      accr = _mm256_fnmadd_pd(mi, vi, accr);
      acci = _mm256_fmadd_pd(mr, vi, acci);
      acci = _mm256_fmadd_pd(mi, vr, acci);
      _mm256_storeu_pd(yr + r, accr);
      _mm256_storeu_pd(yi + r, acci);
    }
    for (; r < rows; ++r) {
      yr[r] += colr[r] * xr[c] - coli[r] * xi[c];
      yi[r] += colr[r] * xi[c] + coli[r] * xr[c];
    }
  }
}

// Two interleaved complex numbers per register: (a b | c d) * (e f | g h).
SPINQOC_AVX2 void cmul_pointwise_avx2(std::size_t len, double* x, const double* t) {
  std::size_t i = 0;
  for (; i + 2 <= len; i += 2) {
    const __m256d a = _mm256_loadu_pd(x + 2 * i);
    const __m256d b = _mm256_loadu_pd(t + 2 * i);
    const __m256d b_re = _mm256_movedup_pd(b);
    const __m256d b_im = _mm256_permute_pd(b, 0xF);
    const __m256d a_sw = _mm256_permute_pd(a, 0x5);
    _mm256_storeu_pd(x + 2 * i, _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im)));
  }
  if (i < len) cmul_pointwise_scalar(len - i, x + 2 * i, t + 2 * i);
}

}  // namespace spinqoc::kernels::detail

#endif  // SPINQOC_X86

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

namespace spinqoc::kernels::detail {

void cmatmul_scalar(int n, const double* ar, const double* ai, const double* br,
                    const double* bi, double* cr, double* ci) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cr[i * n + j] = 0.0;
      ci[i * n + j] = 0.0;
    }
    for (int k = 0; k < n; ++k) {
      const double xr = ar[i * n + k];
      const double xi = ai[i * n + k];
      const double* rr = br + k * n;
      const double* ri = bi + k * n;
      for (int j = 0; j < n; ++j) {
        cr[i * n + j] += xr * rr[j] - xi * ri[j];
        ci[i * n + j] += xr * ri[j] + xi * rr[j];
      }
    }
  }
}

double dot_scalar(std::size_t len, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(std::size_t len, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < len; ++i) y[i] += a * x[i];
}

void cgemv_scalar(int rows, int cols, const double* kr, const double* ki,
                  const double* xr, const double* xi, double* yr, double* yi) {
  for (int r = 0; r < rows; ++r) {
    yr[r] = 0.0;
    yi[r] = 0.0;
  }
  for (int c = 0; c < cols; ++c) {
    const double vr = xr[c];
    const double vi = xi[c];
    const double* colr = kr + static_cast<std::size_t>(c) * rows;
    const double* coli = ki + static_cast<std::size_t>(c) * rows;
    for (int r = 0; r < rows; ++r) {
      yr[r] += colr[r] * vr - coli[r] * vi;
      yi[r] += colr[r] * vi + coli[r] * vr;
    }
  }
}

void cmul_pointwise_scalar(std::size_t len, double* x, const double* t) {
  for (std::size_t i = 0; i < len; ++i) {
    const double a = x[2 * i], b = x[2 * i + 1];
    const double c = t[2 * i], d = t[2 * i + 1];
    x[2 * i] = a * c - b * d;
    x[2 * i + 1] = a * d + b * c;
  }
}

}  // namespace spinqoc::kernels::detail

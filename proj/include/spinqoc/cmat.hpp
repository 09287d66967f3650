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

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace spinqoc {

using cplx = std::complex<double>;
using EigenCMat = Eigen::MatrixXcd;

/// Small dense complex matrix (dimension up to 8) with split real/imaginary
/// storage, the layout the SIMD kernels consume. No heap allocation.
class CMat {
 public:
  static constexpr int kMaxDim = 8;

  CMat() = default;
  explicit CMat(int n);
  CMat(const CMat& other) { copy_from(other); }
  CMat& operator=(const CMat& other) {
    if (this != &other) copy_from(other);
    return *this;
  }

  static CMat identity(int n);
  static CMat from_eigen(const EigenCMat& m);
  EigenCMat to_eigen() const;

  int dim() const { return n_; }
  cplx operator()(int i, int j) const { return {re_[i * n_ + j], im_[i * n_ + j]}; }
  void set(int i, int j, cplx v) {
    re_[i * n_ + j] = v.real();
    im_[i * n_ + j] = v.imag();
  }

  double* re() { return re_.data(); }
  double* im() { return im_.data(); }
  const double* re() const { return re_.data(); }
  const double* im() const { return im_.data(); }

  CMat adjoint() const;
  cplx trace() const;
  // Max-column-sum norm.
  double norm1() const;
  double frobenius() const;
  // Re Tr[this * b] assuming b is Hermitian: sum_ij Re(a_ij conj(b_ij)).
  double re_trace_with_hermitian(const CMat& b) const;

  CMat& operator+=(const CMat& b);
  CMat& operator-=(const CMat& b);
  CMat& operator*=(cplx s);

  friend CMat operator*(const CMat& a, const CMat& b);
  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cplx s, CMat a) { return a *= s; }

 private:
  void copy_from(const CMat& other);

  int n_ = 0;
  alignas(32) std::array<double, kMaxDim * kMaxDim> re_{};
  alignas(32) std::array<double, kMaxDim * kMaxDim> im_{};
};

/// c = a * b without temporaries; c must be a distinct object.
void multiply_into(const CMat& a, const CMat& b, CMat& c);

double max_abs_diff(const CMat& a, const CMat& b);

CMat kron(const CMat& a, const CMat& b);

/// exp(-i t H) for Hermitian H by Taylor scaling-and-squaring on the SIMD
/// matmul kernel. Truncation error is below 1e-15 relative to the result.
CMat expm_hermitian(const CMat& h, double t);

struct HermitianEig {
  std::vector<double> values;  // ascending
  CMat vectors;                // columns are eigenvectors
};

HermitianEig eig_hermitian(const CMat& h);

}  // namespace spinqoc

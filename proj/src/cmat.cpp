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

#include "spinqoc/cmat.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "spinqoc/kernels.hpp"

namespace spinqoc {

CMat::CMat(int n) : n_(n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("CMat dimension out of range");
}

void CMat::copy_from(const CMat& other) {
  n_ = other.n_;
  const std::size_t len = static_cast<std::size_t>(n_) * n_;
  std::memcpy(re_.data(), other.re_.data(), len * sizeof(double));
  std::memcpy(im_.data(), other.im_.data(), len * sizeof(double));
}

CMat CMat::identity(int n) {
  CMat m(n);
  for (int i = 0; i < n; ++i) m.re_[i * n + i] = 1.0;
  return m;
}

CMat CMat::from_eigen(const EigenCMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("CMat::from_eigen: not square");
  CMat out(static_cast<int>(m.rows()));
  for (int i = 0; i < out.n_; ++i)
    for (int j = 0; j < out.n_; ++j) out.set(i, j, m(i, j));
  return out;
}

EigenCMat CMat::to_eigen() const {
  EigenCMat m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

CMat CMat::adjoint() const {
  CMat out(n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      out.re_[j * n_ + i] = re_[i * n_ + j];
      out.im_[j * n_ + i] = -im_[i * n_ + j];
    }
  }
  return out;
}

cplx CMat::trace() const {
  cplx t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double CMat::norm1() const {
  double best = 0.0;
  for (int j = 0; j < n_; ++j) {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += std::hypot(re_[i * n_ + j], im_[i * n_ + j]);
    best = std::max(best, s);
  }
  return best;
}

double CMat::frobenius() const {
  const std::size_t len = static_cast<std::size_t>(n_) * n_;
  const auto& k = kernels::active();
  return std::sqrt(k.dot(len, re_.data(), re_.data()) + k.dot(len, im_.data(), im_.data()));
}

double CMat::re_trace_with_hermitian(const CMat& b) const {
  const std::size_t len = static_cast<std::size_t>(n_) * n_;
  const auto& k = kernels::active();
  return k.dot(len, re_.data(), b.re_.data()) + k.dot(len, im_.data(), b.im_.data());
}

CMat& CMat::operator+=(const CMat& b) {
  const std::size_t len = static_cast<std::size_t>(n_) * n_;
  const auto& k = kernels::active();
  k.axpy(len, 1.0, b.re_.data(), re_.data());
  k.axpy(len, 1.0, b.im_.data(), im_.data());
  return *this;
}

CMat& CMat::operator-=(const CMat& b) {
  const std::size_t len = static_cast<std::size_t>(n_) * n_;
  const auto& k = kernels::active();
  k.axpy(len, -1.0, b.re_.data(), re_.data());
  k.axpy(len, -1.0, b.im_.data(), im_.data());
  return *this;
}

CMat& CMat::operator*=(cplx s) {
  const int len = n_ * n_;
  for (int i = 0; i < len; ++i) {
    const cplx v = cplx(re_[i], im_[i]) * s;
    re_[i] = v.real();
    im_[i] = v.imag();
  }
  return *this;
}

void multiply_into(const CMat& a, const CMat& b, CMat& c) {
  if (a.dim() != b.dim()) throw std::invalid_argument("CMat multiply: dimension mismatch");
  if (c.dim() != a.dim()) c = CMat(a.dim());
  kernels::active().cmatmul(a.dim(), a.re(), a.im(), b.re(), b.im(), c.re(), c.im());
}

CMat operator*(const CMat& a, const CMat& b) {
  CMat c(a.dim());
  multiply_into(a, b, c);
  return c;
}

double max_abs_diff(const CMat& a, const CMat& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

CMat kron(const CMat& a, const CMat& b) {
  const int n = a.dim() * b.dim();
  CMat out(n);
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j)
      for (int k = 0; k < b.dim(); ++k)
        for (int l = 0; l < b.dim(); ++l)
          out.set(i * b.dim() + k, j * b.dim() + l, a(i, j) * b(k, l));
  return out;
}

namespace {

// Adds c * m into acc, both in split storage.
void add_scaled(CMat& acc, double c, const CMat& m) {
  const std::size_t len = static_cast<std::size_t>(m.dim()) * m.dim();
  const auto& k = kernels::active();
  k.axpy(len, c, m.re(), acc.re());
  k.axpy(len, c, m.im(), acc.im());
}

}  // namespace

// Degree-16 Taylor polynomial evaluated Paterson-Stockmeyer style in powers of
// A^4 after scaling ||A||_1 below 1. With ||A||_1 <= 1 the remainder is at
// most 1/17! ~ 2.8e-15.
CMat expm_hermitian(const CMat& h, double t) {
  const int n = h.dim();
  CMat a(n);
  const int len = n * n;
  for (int i = 0; i < len; ++i) {
    a.re()[i] = t * h.im()[i];
    a.im()[i] = -t * h.re()[i];
  }
  const double norm = a.norm1();
  int squarings = 0;
  if (norm > 1.0) squarings = static_cast<int>(std::ceil(std::log2(norm)));
  if (squarings > 0) {
    const double scale = std::ldexp(1.0, -squarings);
    for (int i = 0; i < len; ++i) {
      a.re()[i] *= scale;
      a.im()[i] *= scale;
    }
  }

  static constexpr std::array<double, 17> c = [] {
    std::array<double, 17> v{};
    v[0] = 1.0;
    for (int k = 1; k < 17; ++k) v[k] = v[k - 1] / k;
    return v;
  }();

  const CMat eye = CMat::identity(n);
  CMat a2(n), a3(n), a4(n);
  multiply_into(a, a, a2);
  multiply_into(a2, a, a3);
  multiply_into(a2, a2, a4);

  auto block = [&](int j) {
    CMat b(n);
    add_scaled(b, c[4 * j], eye);
    add_scaled(b, c[4 * j + 1], a);
    add_scaled(b, c[4 * j + 2], a2);
    add_scaled(b, c[4 * j + 3], a3);
    return b;
  };

  CMat x = block(3);
  add_scaled(x, c[16], a4);
  CMat tmp(n);
  for (int j = 2; j >= 0; --j) {
    multiply_into(a4, x, tmp);
    x = block(j);
    x += tmp;
  }
  for (int s = 0; s < squarings; ++s) {
    multiply_into(x, x, tmp);
    x = tmp;
  }
  return x;
}

HermitianEig eig_hermitian(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<EigenCMat> solver(h.to_eigen());
  if (solver.info() != Eigen::Success) throw std::runtime_error("eig_hermitian: solver failed");
  HermitianEig out;
  out.values.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + solver.eigenvalues().size());
  out.vectors = CMat::from_eigen(solver.eigenvectors());
  return out;
}

}  // namespace spinqoc

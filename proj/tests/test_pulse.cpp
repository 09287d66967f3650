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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "spinqoc/pulse.hpp"

namespace spinqoc {
namespace {

Eigen::MatrixXd as_matrix(const BasisSet& b) {
  Eigen::MatrixXd m(b.length, b.size());
  for (std::size_t k = 0; k < b.size(); ++k)
    for (int i = 0; i < b.length; ++i) m(i, k) = b.vectors[k][i];
  return m;
}

TEST(Pulse, Constructors) {
  const ControlPulse s = ControlPulse::square(100, 2.0, 20.0, 0.0);
  EXPECT_EQ(s.segments(), 100);
  EXPECT_NEAR(s.duration_us(), 0.2, 1e-15);
  EXPECT_THROW(ControlPulse::square(0, 2.0, 1.0, 0.0), std::invalid_argument);
  const ControlPulse t = ControlPulse::tone(10, 2.0, 36.0, 5.0);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(std::hypot(t.ux[i], t.uy[i]), 5.0, 1e-12);
}

TEST(Pulse, HadamardBlocksFollowBinaryExpansion) {
  EXPECT_EQ(hadamard_blocks(100), (std::vector<int>{64, 32, 4}));
  EXPECT_EQ(hadamard_blocks(64), (std::vector<int>{64}));
  EXPECT_EQ(hadamard_blocks(7), (std::vector<int>{4, 2, 1}));
  EXPECT_THROW(hadamard_blocks(0), std::invalid_argument);
}

TEST(Pulse, LinearBasisIsOrthonormalAndComplete) {
  for (int m : {1, 4, 7, 100}) {
    const BasisSet b = make_linear_basis(m);
    ASSERT_EQ(static_cast<int>(b.size()), m);
    const Eigen::MatrixXd v = as_matrix(b);
    EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12) << m;
  }
  // The trailing block of M = 100 is a 4x4 Hadamard on segments 96..99 with entries +/-1/2.
  const BasisSet b = make_linear_basis(100);
  for (int k = 96; k < 100; ++k) {
    for (int i = 0; i < 96; ++i) EXPECT_EQ(b.vectors[k][i], 0.0);
    for (int i = 96; i < 100; ++i) EXPECT_NEAR(std::abs(b.vectors[k][i]), 0.5, 1e-15);
  }
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(b.vectors[0][i], 0.125, 1e-15);
}

TEST(Pulse, CanonicalBasis) {
  const BasisSet b = make_canonical_basis(5);
  EXPECT_TRUE(as_matrix(b).isIdentity(0.0));
}

TEST(Pulse, SlepianFullBandIsIdentityKernel) {
  const BasisSet b = make_slepian_basis(16, 0.5);
  EXPECT_EQ(b.size(), 16u);
  for (double lam : b.eigenvalues) EXPECT_NEAR(lam, 1.0, 1e-12);
  for (int l = 0; l < 16; ++l)
    for (int m = 0; m < 16; ++m) EXPECT_EQ(slepian_kernel(l, m, 0.5), l == m ? 1.0 : 0.0);
}

TEST(Pulse, SlepianMatchesDenseKernelEigenproblem) {
  const int n = 100;
  const double w = 0.12;
  const BasisSet b = make_slepian_basis(n, w);
  ASSERT_EQ(b.size(), 24u);

  Eigen::MatrixXd kernel(n, n);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      kernel(l, m) = l == m ? 2 * w : std::sin(2 * M_PI * w * (l - m)) / (M_PI * (l - m));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(kernel);
  const Eigen::VectorXd ev = dense.eigenvalues();  // ascending

  const Eigen::MatrixXd v = as_matrix(b);
  EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(24, 24)).cwiseAbs().maxCoeff(), 1e-10);
  for (int k = 0; k < 24; ++k) {
    EXPECT_NEAR(b.eigenvalues[k], ev(n - 1 - k), 1e-9) << k;
    const Eigen::VectorXd r = kernel * v.col(k) - b.eigenvalues[k] * v.col(k);
    EXPECT_LT(r.norm(), 1e-8) << k;
    if (k > 0) EXPECT_LE(b.eigenvalues[k], b.eigenvalues[k - 1]);
  }
  // The leading sequences are almost fully concentrated; the last kept one is not.
  EXPECT_GT(b.eigenvalues[0], 1.0 - 1e-12);
  EXPECT_LT(b.eigenvalues[23], 0.9);
  // Even sequences are symmetric about the center.
  for (int i = 0; i < n; ++i) EXPECT_NEAR(b.vectors[0][i], b.vectors[0][n - 1 - i], 1e-10);

  EXPECT_THROW(make_slepian_basis(n, 0.0), std::invalid_argument);
  EXPECT_THROW(make_slepian_basis(n, 0.6), std::invalid_argument);
  EXPECT_THROW(make_slepian_basis(n, 0.12, 101), std::invalid_argument);
  EXPECT_EQ(make_slepian_basis(n, 0.12, 12).size(), 12u);
}

TEST(Pulse, UpdateAndPerturb) {
  ControlPulse p = ControlPulse::square(4, 2.0, 1.0, -1.0);
  GradientVector g = GradientVector::zeros(4);
  g.gx = {1, 2, 3, 4};
  g.gy = {-1, 0, 1, 0};
  const ControlPulse q = update_pulse(p, g, 0.5);
  EXPECT_EQ(q.ux, (std::vector<double>{1.5, 2.0, 2.5, 3.0}));
  EXPECT_EQ(q.uy, (std::vector<double>{-1.5, -1.0, -0.5, -1.0}));
  p.max_amp = 2.0;
  EXPECT_EQ(update_pulse(p, g, 1.0).ux, (std::vector<double>{2.0, 2.0, 2.0, 2.0}));
  EXPECT_THROW(update_pulse(p, GradientVector::zeros(3), 1.0), std::invalid_argument);

  const std::vector<double> v{0.5, 0.5, -0.5, -0.5};
  const ControlPulse plus = perturb_along(q, v, 2.0, Channel::y, +1);
  const ControlPulse minus = perturb_along(q, v, 2.0, Channel::y, -1);
  EXPECT_EQ(plus.ux, q.ux);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(plus.uy[i] - q.uy[i], v[i] * 2.0, 1e-15);
    EXPECT_NEAR(plus.uy[i] - minus.uy[i], 4.0 * v[i], 1e-15);
  }
}

TEST(Pulse, GradientAlgebra) {
  GradientVector a = GradientVector::zeros(2), b = GradientVector::zeros(2);
  a.gx = {3, 0};
  a.gy = {0, 4};
  b.gx = {-3, 0};
  b.gy = {0, -4};
  EXPECT_DOUBLE_EQ(a.norm(), 5.0);
  EXPECT_DOUBLE_EQ(direction_cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(direction_cosine(a, b), -1.0);
  a *= 2.0;
  EXPECT_DOUBLE_EQ(a.norm(), 10.0);
  a.gx[0] = std::nan("");
  EXPECT_FALSE(a.finite());
}

TEST(Pulse, InsertRotationValidatesIndex) {
  const ControlPulse p = ControlPulse::zeros(10, 2.0);
  const PulseProgram prog = insert_rotation(p, 10, Channel::y, -3, RotationModel{});
  ASSERT_TRUE(prog.rotation.has_value());
  EXPECT_EQ(prog.rotation->sign, -1);
  EXPECT_EQ(prog.rotation->after_segment, 10);
  EXPECT_THROW(insert_rotation(p, 0, Channel::x, 1, RotationModel{}), std::invalid_argument);
  EXPECT_THROW(insert_rotation(p, 11, Channel::x, 1, RotationModel{}), std::invalid_argument);
}

TEST(Pulse, TwoToneEnvelopeHasBothTones) {
  RotationModel m;
  m.kind = RotationKind::two_tone;
  m.tone_duration = 200.0;
  const ControlPulse e = two_tone_envelope(m, Channel::x, 1, 3.0);
  EXPECT_EQ(e.segments(), 100);
  for (double y : e.uy) EXPECT_EQ(y, 0.0);
  // Projection onto cos(2 pi 36 t) recovers 2 * amplitude, as two tones of amplitude A.
  double proj = 0.0, norm = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double c = std::cos(2 * M_PI * 36.0 * ((i + 0.5) * 2e-3 - 0.1));
    proj += e.ux[i] * c;
    norm += c * c;
  }
  EXPECT_NEAR(proj / norm, 6.0, 1e-12);
}

TEST(Pulse, TextRoundTrip) {
  ControlPulse p = ControlPulse::tone(7, 2.0, 12.5, 3.25, 0.3);
  std::stringstream ss;
  write_pulse(ss, p);
  const ControlPulse q = read_pulse(ss);
  ASSERT_EQ(q.segments(), 7);
  EXPECT_DOUBLE_EQ(q.dt, 2.0);
  for (int i = 0; i < 7; ++i) {
    EXPECT_DOUBLE_EQ(q.ux[i], p.ux[i]);
    EXPECT_DOUBLE_EQ(q.uy[i], p.uy[i]);
  }
  std::stringstream bad("not a pulse\n");
  EXPECT_ANY_THROW(read_pulse(bad));
}

}  // namespace
}  // namespace spinqoc

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

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "spinqoc/spin_model.hpp"

namespace spinqoc {
namespace {

// Independent Hamiltonian built from Eigen Kronecker products, electron first.
Eigen::MatrixXcd oracle_h0(double a, double b, double wi, double det) {
  Eigen::Matrix2cd sx, sz, id;
  sx << 0, 0.5, 0.5, 0;
  sz << 0.5, 0, 0, -0.5;
  id.setIdentity();
  const Eigen::MatrixXcd SzIz = Eigen::kroneckerProduct(sz, sz);
  const Eigen::MatrixXcd SzIx = Eigen::kroneckerProduct(sz, sx);
  const Eigen::MatrixXcd Iz = Eigen::kroneckerProduct(id, sz);
  const Eigen::MatrixXcd Sz = Eigen::kroneckerProduct(sz, id);
  return 2.0 * M_PI * (wi * Iz + a * SzIz + b * SzIx + det * Sz);
}

TEST(SpinModel, HamiltonianMatchesKroneckerOracle) {
  for (auto [a, b, det] : {std::tuple{72.0, 0.0, 0.0}, {66.0, 26.0, 0.0}, {66.0, 26.0, 7.5}}) {
    SpinSystem s;
    s.a = a;
    s.b = b;
    s.detuning = det;
    const Eigen::MatrixXcd ref = oracle_h0(a, b, s.omega_i, det);
    EXPECT_LT((build_hamiltonian(s).to_eigen() - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SpinModel, NuclearFrequenciesForReferenceSystem) {
  SpinSystem s;
  s.a = 66.0;
  s.b = 26.0;
  EXPECT_NEAR(omega12_abs(s), 22.61, 0.005);
  EXPECT_NEAR(omega34_abs(s), 49.25, 0.005);
  const Eigenstructure e = diagonalize(s);
  EXPECT_NEAR(std::abs(e.omega12), omega12_abs(s), 1e-12);
  EXPECT_NEAR(std::abs(e.omega34), omega34_abs(s), 1e-12);
  EXPECT_FALSE(e.degenerate);
}

TEST(SpinModel, EigenbasisDiagonalizesAndMatchesEigenvalues) {
  for (double b : {0.0, 26.0}) {
    SpinSystem s;
    s.a = 66.0;
    s.b = b;
    s.detuning = 3.0;
    const Eigenstructure e = diagonalize(s);
    const Eigen::MatrixXcd v = e.eigenbasis.to_eigen();
    EXPECT_LT((v.adjoint() * v - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::MatrixXcd d = v.adjoint() * build_hamiltonian(s).to_eigen() * v;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j)
          EXPECT_NEAR(d(i, i).real(), e.diagonal_h0[i], 1e-9);
        else
          EXPECT_NEAR(std::abs(d(i, j)), 0.0, 1e-9);
      }
    // Level differences inside each electron manifold are the nuclear frequencies.
    EXPECT_NEAR(std::abs(e.diagonal_h0[0] - e.diagonal_h0[1]) / (2 * M_PI), omega12_abs(s), 1e-9);
    EXPECT_NEAR(std::abs(e.diagonal_h0[2] - e.diagonal_h0[3]) / (2 * M_PI), omega34_abs(s), 1e-9);
  }
}

TEST(SpinModel, ZeroPseudoSecularGivesProductEigenbasis) {
  SpinSystem s;
  s.a = 72.0;
  s.b = 0.0;
  const Eigenstructure e = diagonalize(s);
  const Eigen::MatrixXcd v = e.eigenbasis.to_eigen();
  // Each column is a single product state.
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(v.col(j).cwiseAbs().maxCoeff(), 1.0, 1e-12);
}

TEST(SpinModel, ThreeSpinEigenstructure) {
  SpinSystem s;
  s.a = 72.0;
  s.extra_proton = ExtraProton{4.0, 4.0};
  EXPECT_EQ(s.dim(), 8);
  const Eigenstructure e = diagonalize(s);
  const Eigen::MatrixXcd v = e.eigenbasis.to_eigen();
  const Eigen::MatrixXcd d = v.adjoint() * build_hamiltonian(s).to_eigen() * v;
  EXPECT_LT((d - Eigen::MatrixXcd(d.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-9);
  // Level k is the eigenvector closest to product state k.
  for (int k = 0; k < 8; ++k) EXPECT_GT(std::norm(v(k, k)), 0.5) << k;
}

TEST(SpinModel, PauliStatesAndWiden) {
  const PauliState zz = pauli_state("ZZ");
  EXPECT_EQ(zz.matrix.dim(), 4);
  EXPECT_NEAR(zz.matrix(0, 0).real(), 1.0, 0.0);
  EXPECT_NEAR(zz.matrix(1, 1).real(), -1.0, 0.0);
  EXPECT_NEAR(zz.matrix(3, 3).real(), 1.0, 0.0);
  const PauliState w = widen(zz, 3);
  EXPECT_EQ(w.label, "ZZI");
  EXPECT_EQ(w.matrix.dim(), 8);
  EXPECT_THROW(widen(pauli_state("ZZI"), 2), std::invalid_argument);
  EXPECT_THROW(pauli_state("ZQ"), std::invalid_argument);
  EXPECT_LT(max_abs_diff(pauli_on('X', 1, 2), pauli_state("IX").matrix), 1e-15);
}

TEST(SpinModel, LorentzianEnsembleWeights) {
  SpinSystem base;
  const Ensemble e = lorentzian_ensemble({10.0, 21, 40.0}, base);
  ASSERT_EQ(e.size(), 21u);
  double total = 0.0;
  for (const auto& m : e) total += m.weight;
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(e[10].system.detuning, 0.0, 1e-15);
  EXPECT_NEAR(e[0].system.detuning, -20.0, 1e-12);
  EXPECT_NEAR(e[20].system.detuning, 20.0, 1e-12);
  // Half maximum at +/- fwhm/2 = 5 MHz, which sits on the 2 MHz grid at index 10 +/- 2.5;
  // check the ratio at 4 MHz against 1 / (1 + (2*4/10)^2).
  EXPECT_NEAR(e[12].weight / e[10].weight, 1.0 / (1.0 + 0.64), 1e-12);
  EXPECT_NEAR(e[0].weight, e[20].weight, 1e-15);
  EXPECT_THROW(lorentzian_ensemble({10.0, 20, 40.0}, base), std::invalid_argument);
  EXPECT_THROW(lorentzian_ensemble({0.0, 21, 40.0}, base), std::invalid_argument);
  EXPECT_EQ(single_member(base).size(), 1u);
}

}  // namespace
}  // namespace spinqoc

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

#include "spinqoc/spin_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinqoc {

namespace {

CMat pauli2(char axis) {
  CMat p(2);
  switch (axis) {
    case 'I':
      p = CMat::identity(2);
      break;
    case 'X':
      p.set(0, 1, 1.0);
      p.set(1, 0, 1.0);
      break;
    case 'Y':
      p.set(0, 1, cplx(0.0, -1.0));
      p.set(1, 0, cplx(0.0, 1.0));
      break;
    case 'Z':
      p.set(0, 0, 1.0);
      p.set(1, 1, -1.0);
      break;
    default:
      throw std::invalid_argument(std::string("unknown Pauli letter '") + axis + "'");
  }
  return p;
}

CMat kron_all(const std::vector<CMat>& factors) {
  CMat out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
  return out;
}

// 2x2 block a*I_z + b*I_x diagonalized in closed form; returns the level
// order (up-like first) as columns of a real rotation and the signed splitting.
struct NuclearBlock {
  double c = 1.0, s = 0.0;  // first column (c, s), second column (-s, c) up to order
  double splitting = 0.0;   // E_first - E_second
  bool tie = false;
  bool swapped = false;     // first column is the lower eigenvector
};

NuclearBlock nuclear_block(double a, double b) {
  NuclearBlock nb;
  const double r = std::hypot(a, b);
  const double eta = std::atan2(b, a);
  const double c = std::cos(eta / 2.0), s = std::sin(eta / 2.0);
  // Upper eigenvector (c, s) with energy +r/2, lower (-s, c) with -r/2.
  nb.tie = std::abs(c * c - s * s) < 1e-12;
  if (c * c >= s * s || nb.tie) {
    nb.c = c;
    nb.s = s;
    nb.splitting = r;
  } else {
    nb.c = -s;
    nb.s = c;
    nb.splitting = -r;
    nb.swapped = true;
  }
  return nb;
}

}  // namespace

CMat pauli_on(char axis, int index, int qubits) {
  std::vector<CMat> f(qubits, CMat::identity(2));
  f.at(index) = pauli2(axis);
  return kron_all(f);
}

CMat build_hamiltonian(const SpinSystem& sys) {
  const int q = sys.qubits();
  auto op = [&](char axis, int idx) { return 0.5 * cplx(1.0) * pauli_on(axis, idx, q); };
  const CMat sz = op('Z', 0);
  const CMat iz = op('Z', 1);
  const CMat ix = op('X', 1);

  CMat h = cplx(sys.omega_i) * iz;
  h += cplx(sys.a) * (sz * iz);
  h += cplx(sys.b) * (sz * ix);
  h += cplx(sys.detuning) * sz;
  if (sys.extra_proton) {
    const CMat iz2 = op('Z', 2);
    const CMat ix2 = op('X', 2);
    h += cplx(sys.extra_proton->a2) * (sz * iz2);
    h += cplx(sys.extra_proton->b2) * (sz * ix2);
    h += cplx(sys.omega_i) * iz2;
  }
  h *= kTwoPi;
  return h;
}

double omega12_abs(const SpinSystem& sys) {
  return std::sqrt(std::pow(sys.omega_i + sys.a / 2.0, 2) + sys.b * sys.b / 4.0);
}

double omega34_abs(const SpinSystem& sys) {
  return std::sqrt(std::pow(sys.omega_i - sys.a / 2.0, 2) + sys.b * sys.b / 4.0);
}

Eigenstructure diagonalize(const SpinSystem& sys) {
  Eigenstructure es;
  // m_s = +1/2 manifold: (w_I + A/2) I_z + (B/2) I_x + det/2
  // m_s = -1/2 manifold: (w_I - A/2) I_z - (B/2) I_x - det/2
  const NuclearBlock up = nuclear_block(sys.omega_i + sys.a / 2.0, sys.b / 2.0);
  const NuclearBlock dn = nuclear_block(sys.omega_i - sys.a / 2.0, -sys.b / 2.0);
  es.omega12 = up.splitting;
  es.omega34 = dn.splitting;
  es.degenerate = up.tie || dn.tie || std::abs(std::abs(es.omega12) - std::abs(es.omega34)) < 1e-9;

  if (!sys.extra_proton) {
    CMat v(4);
    // Columns: level 1,2 in the upper electron manifold, 3,4 in the lower.
    v.set(0, 0, up.c);
    v.set(1, 0, up.s);
    v.set(0, 1, -up.s);
    v.set(1, 1, up.c);
    v.set(2, 2, dn.c);
    v.set(3, 2, dn.s);
    v.set(2, 3, -dn.s);
    v.set(3, 3, dn.c);
    es.eigenbasis = v;
    const double d = sys.detuning / 2.0;
    es.diagonal_h0 = {kTwoPi * (es.omega12 / 2.0 + d), kTwoPi * (-es.omega12 / 2.0 + d),
                      kTwoPi * (es.omega34 / 2.0 - d), kTwoPi * (-es.omega34 / 2.0 - d)};
    return es;
  }

  // Three spins: H0 still commutes with S_z, so each 4x4 electron manifold is
  // diagonalized numerically. Eigenvectors are matched to the product states
  // they overlap most, the same labeling the two-spin closed form uses.
  const CMat h = build_hamiltonian(sys);
  CMat v(8);
  es.diagonal_h0.assign(8, 0.0);
  for (int block = 0; block < 2; ++block) {
    CMat hb(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) hb.set(i, j, h(4 * block + i, 4 * block + j));
    const HermitianEig e = eig_hermitian(hb);
    std::array<int, 4> perm{0, 1, 2, 3}, best = perm;
    double best_score = -1.0, second = -1.0;
    do {
      double score = 0.0;
      for (int col = 0; col < 4; ++col) score += std::norm(e.vectors(col, perm[col]));
      if (score > best_score) {
        second = best_score;
        best_score = score;
        best = perm;
      } else if (score > second) {
        second = score;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best_score - second < 1e-9) es.degenerate = true;
    for (int col = 0; col < 4; ++col) {
      const int src = best[col];
      es.diagonal_h0[4 * block + col] = e.values[src];
      // Phase convention: the matched product amplitude is real and positive.
      const cplx a = e.vectors(col, src);
      const cplx phase = std::abs(a) > 0.0 ? std::conj(a) / std::abs(a) : cplx(1.0);
      for (int i = 0; i < 4; ++i) v.set(4 * block + i, 4 * block + col, phase * e.vectors(i, src));
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (std::abs(e.values[i] - e.values[j]) < kTwoPi * 1e-9) es.degenerate = true;
  }
  es.eigenbasis = v;
  return es;
}

PauliState pauli_state(std::string_view label) {
  if (label.empty()) throw std::invalid_argument("empty Pauli label");
  std::vector<CMat> f;
  for (char c : label) f.push_back(pauli2(c));
  return {std::string(label), kron_all(f)};
}

PauliState widen(const PauliState& s, int qubits) {
  if (static_cast<int>(s.label.size()) > qubits)
    throw std::invalid_argument("cannot narrow Pauli state " + s.label);
  std::string label = s.label;
  label.append(qubits - label.size(), 'I');
  return pauli_state(label);
}

Ensemble lorentzian_ensemble(const EnsembleSpec& spec, const SpinSystem& base) {
  if (spec.n_points < 1) throw std::invalid_argument("ensemble n_points must be >= 1");
  if (spec.n_points % 2 == 0)
    throw std::invalid_argument("ensemble n_points must be odd so the grid has a center point");
  if (!(spec.fwhm > 0.0)) throw std::invalid_argument("ensemble fwhm must be > 0");
  if (!(spec.span > 0.0)) throw std::invalid_argument("ensemble span must be > 0");

  Ensemble out;
  const int n = spec.n_points;
  const int half = n / 2;
  const double step = n > 1 ? spec.span / (n - 1) : 0.0;
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double det = i * step;
    const double x = 2.0 * det / spec.fwhm;
    EnsembleMember m{base, 1.0 / (1.0 + x * x)};
    m.system.detuning = base.detuning + det;
    total += m.weight;
    out.push_back(m);
  }
  for (auto& m : out) m.weight /= total;
  return out;
}

Ensemble single_member(const SpinSystem& sys) { return {EnsembleMember{sys, 1.0}}; }

}  // namespace spinqoc

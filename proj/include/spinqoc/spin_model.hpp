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

// Electron / nuclear spin Hamiltonians in the electron rotating frame.
//
// Units: every frequency parameter is stored in MHz (cycles per microsecond).
// The 2*pi factor is applied exactly once, in build_hamiltonian(), whose
// output is in angular MHz (rad/us). Spin operators are S = sigma/2 and
// I = sigma/2 for the static Hamiltonian; the control Hamiltonian instead uses
// bare Pauli operators, u_x sigma_x + u_y sigma_y, with u already angular.
//
// Basis ordering is electron first: |m_s m_I> = |uu>, |ud>, |du>, |dd>, with a
// third (weakly coupled) proton appended as the least significant qubit.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spinqoc/cmat.hpp"

namespace spinqoc {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ExtraProton {
  double a2 = 0.0;  // secular coupling (MHz)
  double b2 = 0.0;  // pseudo-secular coupling (MHz)
};

struct SpinSystem {
  double a = 72.0;          // secular hyperfine coupling (MHz)
  double b = 0.0;           // pseudo-secular hyperfine coupling (MHz)
  double omega_i = -14.5;   // nuclear Zeeman frequency (MHz, signed)
  double detuning = 0.0;    // electron Larmor offset from the carrier (MHz)
  std::optional<ExtraProton> extra_proton;

  int qubits() const { return extra_proton ? 3 : 2; }
  int dim() const { return extra_proton ? 8 : 4; }
};

/// H0 in angular MHz.
CMat build_hamiltonian(const SpinSystem& sys);

/// Pauli operator acting on qubit `index` (0 = electron) of an n-qubit space.
CMat pauli_on(char axis, int index, int qubits);

struct Eigenstructure {
  double omega12 = 0.0;  // signed nuclear frequency in the m_s=+1/2 manifold (MHz)
  double omega34 = 0.0;  // signed nuclear frequency in the m_s=-1/2 manifold (MHz)
  CMat eigenbasis;       // columns are eigenvectors in level order 1..dim
  std::vector<double> diagonal_h0;  // angular MHz, level order
  bool degenerate = false;          // levels or labels are ambiguous
};

/// Closed-form block diagonalization. H0 commutes with S_z, so each electron
/// manifold is diagonalized on its own; within a manifold the level whose
/// eigenvector overlaps most with nuclear |up> comes first, so the allowed
/// ESR transitions are 1<->3 and 2<->4. For the three-spin system the
/// manifolds are diagonalized numerically and each eigenvector is labeled by
/// the product state it overlaps most.
Eigenstructure diagonalize(const SpinSystem& sys);

/// |omega12| and |omega34| from the closed forms, in MHz.
double omega12_abs(const SpinSystem& sys);
double omega34_abs(const SpinSystem& sys);

/// Deviation density matrix named by a Pauli string, electron letter first.
struct PauliState {
  std::string label;
  CMat matrix;
};

PauliState pauli_state(std::string_view label);
/// Appends identity letters so the state lives on `qubits` qubits.
PauliState widen(const PauliState& s, int qubits);

struct EnsembleSpec {
  double fwhm = 10.0;   // Lorentzian FWHM of the Larmor distribution (MHz)
  int n_points = 21;    // odd
  double span = 40.0;   // total detuning span (MHz)
};

struct EnsembleMember {
  SpinSystem system;
  double weight = 1.0;
};

using Ensemble = std::vector<EnsembleMember>;

/// Uniform detuning grid over [-span/2, span/2] with normalized Lorentzian
/// weights. Rejects even point counts and non-positive widths.
Ensemble lorentzian_ensemble(const EnsembleSpec& spec, const SpinSystem& base);

/// Single-member ensemble holding `sys` with weight 1.
Ensemble single_member(const SpinSystem& sys);

}  // namespace spinqoc

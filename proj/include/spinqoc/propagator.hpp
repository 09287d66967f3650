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

#include <optional>
#include <vector>

#include "spinqoc/cmat.hpp"
#include "spinqoc/pulse.hpp"
#include "spinqoc/spin_model.hpp"

namespace spinqoc {

struct PropagationResult {
  CMat total_unitary;
  std::vector<CMat> segment_unitaries;  // filled when requested
  std::optional<CMat> final_state;      // U rho_i U^dagger when rho_i was given
};

/// H0 + u_x sigma_x^e + u_y sigma_y^e.
CMat total_hamiltonian(const CMat& h0, double ux, double uy);

/// exp(-i dt_ns * 1e-3 * (H0 + Hc)).
CMat segment_unitary(const CMat& h0, double ux, double uy, double dt_ns);

/// U(T) = U_M ... U_1 for a piecewise-constant pulse.
PropagationResult propagate(const ControlPulse& p, const SpinSystem& sys,
                            const PauliState* rho_i = nullptr, bool keep_segments = false);

/// Tone amplitude (rad/us) at which a single square tone at +tone_offset, on a
/// resonant member of `sys`, turns the thermal polarization of that transition
/// by model.theta. Found by bisection around the two-level estimate.
double calibrate_tone_amplitude(const RotationModel& model, const SpinSystem& sys);

/// Unitary of an inserted rotation for one ensemble member.
///  - ideal: exp(-i sign theta sigma_axis / 2) on the electron, zero duration.
///  - two_tone: the finite two-tone square pulse, viewed in the interaction
///    frame of H0 about the pulse center, exp(i H0 tau/2) U exp(i H0 tau/2),
///    so only its rotation content (including selectivity errors) is inserted.
///    `envelope` overrides the tone waveform (e.g. a distorted copy).
CMat rotation_unitary(const InsertedRotation& rot, const SpinSystem& sys,
                      std::optional<double> tone_amplitude = std::nullopt,
                      const ControlPulse* envelope = nullptr);

/// Propagates a program; segment m is split in halves with the rotation between.
PropagationResult propagate(const PulseProgram& prog, const SpinSystem& sys,
                            const PauliState* rho_i = nullptr,
                            std::optional<double> tone_amplitude = std::nullopt);

/// Tr[U rho_i U^dagger rho_f] / 2^n. Throws on dimension mismatch.
double state_fidelity(const PauliState& rho_i, const PauliState& rho_f, const CMat& u);
double state_fidelity(const CMat& rho_i, const CMat& rho_f, const CMat& u);

/// Weighted mean of state_fidelity over the members, summed in member order.
double ensemble_fidelity(const ControlPulse& p, const Ensemble& ensemble, const PauliState& rho_i,
                         const PauliState& rho_f);

/// Exact gradient of Tr[U rho_i U^dagger rho_f]/2^n with respect to every
/// (segment, channel) amplitude. Each segment derivative uses the spectral
/// form of d exp(-i dt H)/du, so the result agrees with finite differences
/// to their truncation error rather than to first order in dt.
GradientVector analytic_gradient(const ControlPulse& p, const SpinSystem& sys,
                                 const PauliState& rho_i, const PauliState& rho_f);

/// Gradient of a general Hermitian observable O: d/du Tr[U rho_i U^dagger O] / 2^n.
GradientVector analytic_gradient(const ControlPulse& p, const SpinSystem& sys, const CMat& rho_i,
                                 const CMat& observable);

/// Weighted mean of per-member gradients.
GradientVector analytic_gradient(const ControlPulse& p, const Ensemble& ensemble,
                                 const PauliState& rho_i, const PauliState& rho_f);

}  // namespace spinqoc

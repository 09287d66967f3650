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

// Emulated hardware loop: transfer-function distortion of the programmed
// pulse, transition-selective readout of the evolved ensemble, reference
// normalization and Gaussian measurement noise.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spinqoc/cmat.hpp"
#include "spinqoc/pulse.hpp"
#include "spinqoc/spin_model.hpp"

namespace spinqoc {

// ---------------------------------------------------------------------------
// Transfer functions
// ---------------------------------------------------------------------------

struct TransferFunction {
  std::vector<double> freq_grid;  // MHz, baseband, uniform, strictly increasing
  std::vector<cplx> response;
  double fwhm_label = 0.0;        // MHz, descriptive

  /// Throws unless the grid is uniform, increasing and the response finite.
  void validate() const;
  double f_min() const { return freq_grid.front(); }
  double f_max() const { return freq_grid.back(); }
  bool covers(double f) const;
  /// Linear interpolation in (re, im); zero outside the grid.
  cplx at(double f) const;
  bool is_flat() const;

  static TransferFunction flat(double half_span_mhz = 500.0, double step_mhz = 0.25);
};

enum class TransferKind { measured_like, lorentzian };

/// Smooth complex response with amplitude FWHM `fwhm` and peak 1 at 0 MHz.
///  - lorentzian: 1 / (1 + i x)^2 with x = 2 f / fwhm, i.e. Lorentzian
///    magnitude 1 / (1 + x^2) and phase -2 atan(x).
///  - measured_like: Lorentzian magnitude whose half-widths differ by
///    +/-1.5% on the two sides (so the +/-36 MHz lines see unequal gain) and a
///    resonator-like phase -atan(x).
TransferFunction synthesize_transfer(double fwhm, TransferKind kind);

/// Two-column CSV: "freq_mhz,re,im" rows (a header line is optional).
TransferFunction load_transfer_csv(const std::string& path);
void save_transfer_csv(const std::string& path, const TransferFunction& t);

/// Zero-pad factor used for the discrete Fourier route (padded length is the
/// next power of two >= 4 M).
int padded_length(int segments);

/// Distorts the complex envelope u_x + i u_y: DFT with >= 4x zero padding,
/// pointwise product with the interpolated response, inverse DFT, truncation
/// to M segments. Rejects pulses with more than `max_outside_energy` of their
/// spectral energy at frequencies the transfer grid does not cover.
ControlPulse distort(const ControlPulse& p, const TransferFunction& t,
                     double max_outside_energy = 1e-6);

/// The same linear map as distort() for fixed (T, M, dt), stored as an M x M
/// complex matrix so it can be applied in the measurement loop and
/// transposed for the chain rule. K[n][m] = h[(n - m) mod N] where h is the
/// inverse DFT of the sampled response.
class DistortionOperator {
 public:
  DistortionOperator() = default;
  DistortionOperator(const TransferFunction& t, int segments, double dt_ns);

  /// Identity map of the given size.
  static DistortionOperator identity(int segments, double dt_ns);

  bool is_identity() const { return identity_; }
  int segments() const { return m_; }
  double dt() const { return dt_; }
  cplx entry(int row, int col) const;

  ControlPulse apply(const ControlPulse& p) const;
  /// Chain rule g = (d u~ / d u)^T g~, i.e. K^H applied to g~x + i g~y.
  GradientVector transpose_apply(const GradientVector& g_distorted) const;

 private:
  bool identity_ = true;
  int m_ = 0;
  double dt_ = 0.0;
  std::vector<double> kr_, ki_;    // column-major K
  std::vector<double> khr_, khi_;  // column-major K^H
};

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

struct MeasurementModel {
  double sigma = 0.0;       // noise std on each normalized signal
  std::uint64_t seed = 1;
  int averages = 16000;     // informational
};

/// Deterministic child stream keyed by (seed, iteration, component, tag), so
/// parallel and serial evaluation draw identical numbers.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t component,
              std::uint64_t tag = 0);
  double gaussian(double sigma);

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SignalPair {
  double sl = 0.0;
  double sr = 0.0;
};

enum class GateKind { gate1, gate2, state };

/// What a run optimizes. gate1: ZI -> XI read out as F_XI; gate2: ZI -> ZZ
/// read out as F_ZZ; state: an arbitrary Pauli target scored by the
/// state fidelity Tr[U rho_i U^dagger rho_f]/2^n. Gate readouts are
/// transition-selective, so their Pauli labels refer to the hyperfine
/// eigenstates (identical to the product basis when B = 0); state targets
/// use the product basis.
struct Target {
  GateKind kind = GateKind::gate2;
  std::string initial = "ZI";
  std::string final_state = "ZZ";

  static Target gate1() { return {GateKind::gate1, "ZI", "XI"}; }
  static Target gate2() { return {GateKind::gate2, "ZI", "ZZ"}; }
  static Target state(std::string rho_i, std::string rho_f) {
    return {GateKind::state, std::move(rho_i), std::move(rho_f)};
  }
  /// Number of Pauli elements composing the target (P).
  int pauli_terms() const { return 1; }
};

std::string gate_name(GateKind g);
GateKind parse_gate(const std::string& s);

/// gate1 -> (sL + sR)/2 = F_XI; gate2 -> (sL - sR)/2 = F_ZZ. For state
/// targets sL carries the fidelity itself and sR is unused.
double control_quality(const SignalPair& s, GateKind gate);

/// Uncertainty of F from the normalized signal ratios, evaluated exactly as
/// sqrt(r_L^2 (e_sL^2 + e_refL^2) + r_R^2 (e_sR^2 + e_refR^2)) with r = S/S_ref
/// and e = relative uncertainties. Throws if a reference is zero.
double propagate_error(double sl, double sr, double ref_l, double ref_r, double dsl, double dsr,
                       double dref_l, double dref_r);

struct ExperimentBudget {
  long long experiments_per_iteration = 0;
  long long cumulative = 0;
};

/// cumulative += 4 N M P.
ExperimentBudget charge_budget(const ExperimentBudget& b, int n_drives, int segments, int p_terms);

/// Ensemble of detuned spin systems behind a transfer function, read out
/// through selective transition observables with Gaussian noise.
class VirtualSpectrometer {
 public:
  VirtualSpectrometer(Ensemble truth, DistortionOperator transfer, MeasurementModel noise,
                      TransferFunction transfer_shape = TransferFunction::flat());

  const Ensemble& ensemble() const { return ensemble_; }
  const DistortionOperator& transfer() const { return transfer_; }
  const TransferFunction& transfer_shape() const { return transfer_shape_; }
  const MeasurementModel& noise() const { return noise_; }
  /// Same hardware with sigma = 0.
  VirtualSpectrometer noiseless() const {
    VirtualSpectrometer c = *this;
    c.noise_.sigma = 0.0;
    return c;
  }
  int qubits() const { return qubits_; }
  /// Gate-1 normalization: transverse signals of an ideal selective square
  /// pi/2 pulse on each transition (flat transfer).
  SignalPair gate1_reference() const { return gate1_ref_; }
  double tone_amplitude(const RotationModel& model) const;

  /// Noiseless normalized signals for a programmed (undistorted) pulse.
  SignalPair ideal_signals(const ControlPulse& programmed, const Target& target) const;
  /// Same, for a pulse that has already gone through the transfer function.
  SignalPair ideal_signals_distorted(const ControlPulse& distorted, const Target& target) const;
  /// Adds independent N(0, sigma^2) noise to each normalized signal.
  SignalPair add_noise(SignalPair s, NoiseStream& stream) const;
  SignalPair measure_signals(const ControlPulse& programmed, const Target& target,
                             NoiseStream& stream) const;

  /// Noiseless quality of a programmed pulse (what the hardware would give
  /// without shot noise).
  double true_quality(const ControlPulse& programmed, const Target& target) const;

  /// Noiseless signals for every rotation-inserted experiment on a pulse
  /// (rotation at the midpoint of segment m):
  /// index ((axis * M) + (m-1)) * 2 + (sign < 0). The programmed pulse is
  /// distorted once; the rotations themselves pass through the transfer
  /// function only for the two-tone model.
  std::vector<SignalPair> rotation_scan(const ControlPulse& programmed, const Target& target,
                                        const RotationModel& model) const;

  /// Hermitian O with noiseless quality = sum_w Tr[U rho_i U^dagger O].
  CMat quality_observable(const Target& target) const;
  CMat initial_state(const Target& target) const;

  /// Exact gradient of the noiseless quality with respect to the programmed
  /// amplitudes, including the distortion Jacobian.
  GradientVector exact_gradient(const ControlPulse& programmed, const Target& target) const;

 private:
  struct Readout {
    CMat rho_i;
    CMat obs_l, obs_r;
    double norm_l = 1.0, norm_r = 1.0;  // noiseless reference values
  };
  Readout readout_for(const Target& target) const;
  SignalPair signals_from_unitaries(const std::vector<CMat>& unitaries, const Readout& r) const;

  Ensemble ensemble_;
  DistortionOperator transfer_;
  TransferFunction transfer_shape_;
  MeasurementModel noise_;
  int qubits_ = 2;
  std::vector<CMat> h0_;
  CMat frame_;  // eigenvectors of the resonant member, level order
  SignalPair gate1_ref_{1.0, 1.0};
};

/// Observable-normalized transverse magnitude of one allowed transition after
/// a square selective pi/2 tone, averaged over the ensemble.
double square_pulse_reference(const Ensemble& ensemble, bool left, double duration_ns = 200.0,
                              double dt_ns = 2.0);

}  // namespace spinqoc

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

// Piecewise-constant two-channel control pulses, the basis sets used to
// probe them, and the pulse programs that carry an inserted rotation.
//
// Amplitudes are angular (rad/us): the control Hamiltonian is
// u_x sigma_x + u_y sigma_y on the electron, so a segment of length dt with
// amplitude u rotates the electron by 2 u dt.

#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinqoc {

enum class Channel { x, y };

struct ControlPulse {
  double dt = 2.0;  // segment length (ns)
  std::vector<double> ux;
  std::vector<double> uy;
  std::optional<double> max_amp;

  int segments() const { return static_cast<int>(ux.size()); }
  double duration_us() const { return dt * 1e-3 * segments(); }
  std::vector<double>& channel(Channel c) { return c == Channel::x ? ux : uy; }
  const std::vector<double>& channel(Channel c) const { return c == Channel::x ? ux : uy; }

  /// Throws unless ux/uy have the same length M >= 1 and dt > 0.
  void validate() const;

  static ControlPulse zeros(int m, double dt);
  static ControlPulse square(int m, double dt, double ax, double ay);
  /// Constant-amplitude tone a exp(i (2 pi f t + phase)) on the complex
  /// envelope u_x + i u_y, sampled at segment centers; f in MHz.
  static ControlPulse tone(int m, double dt, double freq_mhz, double amp, double phase = 0.0);
};

/// Gradient of a fidelity with respect to (ux, uy), per unit amplitude.
struct GradientVector {
  std::vector<double> gx;
  std::vector<double> gy;

  static GradientVector zeros(int m) { return {std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)}; }
  int segments() const { return static_cast<int>(gx.size()); }
  std::vector<double>& channel(Channel c) { return c == Channel::x ? gx : gy; }
  const std::vector<double>& channel(Channel c) const { return c == Channel::x ? gx : gy; }
  double norm() const;
  bool finite() const;
  double dot(const GradientVector& o) const;
  GradientVector& operator+=(const GradientVector& o);
  GradientVector& operator*=(double s);
};

/// Cosine of the angle between two gradients (0 if either is zero).
double direction_cosine(const GradientVector& a, const GradientVector& b);

enum class BasisKind { linear_hadamard, slepian, canonical };

struct BasisSet {
  BasisKind kind = BasisKind::canonical;
  int length = 0;
  std::vector<std::vector<double>> vectors;
  // Slepian only.
  int slepian_n = 0;
  double slepian_w = 0.0;
  std::vector<double> eigenvalues;

  std::size_t size() const { return vectors.size(); }
};

/// Unit vectors e_k.
BasisSet make_canonical_basis(int m);

/// Block-direct-sum of Sylvester Hadamard matrices. M is split into its
/// binary decomposition with the largest block first (100 -> 64 + 32 + 4),
/// blocks laid out contiguously in segment order, rows scaled to unit norm.
BasisSet make_linear_basis(int m);

/// Block sizes used by make_linear_basis.
std::vector<int> hadamard_blocks(int m);

/// The `count` leading discrete prolate spheroidal sequences of length n and
/// half-bandwidth w (cycles/sample). Default count is round(2 n w).
BasisSet make_slepian_basis(int n, double w, std::optional<int> count = std::nullopt);

/// Entry (l, m) of the sinc concentration kernel sin(2 pi w (l-m)) / (pi (l-m)).
double slepian_kernel(int l, int m, double w);

/// u + c g per channel, clamped to max_amp when set.
ControlPulse update_pulse(const ControlPulse& p, const GradientVector& g, double c);

/// Adds sign * delta * v to one channel.
ControlPulse perturb_along(const ControlPulse& p, std::span<const double> v, double delta,
                           Channel channel, int sign);

enum class RotationKind { ideal, two_tone };

struct RotationModel {
  RotationKind kind = RotationKind::ideal;
  double theta = std::numbers::pi / 2.0;  // rad
  double tone_offset = 36.0;              // MHz; tones at +/- offset
  double tone_duration = 200.0;           // ns
  double tone_dt = 2.0;                   // ns, sampling of the tone envelope
};

struct InsertedRotation {
  int after_segment = 1;  // 1..M; the rotation sits at the midpoint of segment m
  Channel axis = Channel::x;
  int sign = 1;
  RotationModel model;
};

/// A pulse plus an optional rotation inserted inside one of its segments.
struct PulseProgram {
  ControlPulse pulse;
  std::optional<InsertedRotation> rotation;
};

PulseProgram insert_rotation(const ControlPulse& p, int m, Channel axis, int sign,
                             const RotationModel& model);

/// Envelope of the two-tone rotation: two square tones of amplitude
/// `tone_amplitude` at +/- tone_offset with phase referenced to the pulse
/// center, i.e. 2 a cos(2 pi f (t - t_c)) on the rotation axis channel.
ControlPulse two_tone_envelope(const RotationModel& model, Channel axis, int sign,
                               double tone_amplitude);

/// Plain-text pulse format: a header line "# dt=<ns> M=<segments>" followed
/// by M rows "ux uy" written with 17 significant digits.
void write_pulse(std::ostream& os, const ControlPulse& p);
ControlPulse read_pulse(std::istream& is);
void save_pulse(const std::string& path, const ControlPulse& p);
ControlPulse load_pulse(const std::string& path);

}  // namespace spinqoc

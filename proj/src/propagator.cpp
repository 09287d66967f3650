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

#include "spinqoc/propagator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spinqoc {

namespace {

constexpr double kNsToUs = 1e-3;

void check_dims(const CMat& a, const CMat& b, const char* what) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()) + ")");
}

// Single-member spectral data of one segment Hamiltonian.
struct SegmentSpectrum {
  std::vector<double> energies;
  CMat v;
};

// sigma_x^e / sigma_y^e in the eigenbasis: V^dagger S V.
CMat to_basis(const CMat& v, const CMat& op) { return v.adjoint() * op * v; }

// Gamma_jk = d/du of the exponent divided-difference kernel:
// -i dt exp(-i dt (e_j + e_k)/2) sinc(dt (e_j - e_k)/2).
cplx divided_difference(double ej, double ek, double dt) {
  const double half = 0.5 * dt * (ej - ek);
  const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  const double phase = -0.5 * dt * (ej + ek);
  return cplx(0.0, -dt) * std::polar(1.0, phase) * sinc;
}

}  // namespace

CMat total_hamiltonian(const CMat& h0, double ux, double uy) {
  CMat h = h0;
  const int half = h0.dim() / 2;
  // sigma_x^e couples |0 n> <-> |1 n>, sigma_y^e likewise with -i / +i.
  for (int n = 0; n < half; ++n) {
    const int up = n, dn = half + n;
    h.set(up, dn, h(up, dn) + cplx(ux, -uy));
    h.set(dn, up, h(dn, up) + cplx(ux, uy));
  }
  return h;
}

CMat segment_unitary(const CMat& h0, double ux, double uy, double dt_ns) {
  return expm_hermitian(total_hamiltonian(h0, ux, uy), dt_ns * kNsToUs);
}

PropagationResult propagate(const ControlPulse& p, const SpinSystem& sys, const PauliState* rho_i,
                            bool keep_segments) {
  p.validate();
  const CMat h0 = build_hamiltonian(sys);
  PropagationResult r;
  r.total_unitary = CMat::identity(sys.dim());
  CMat tmp(sys.dim());
  for (int m = 0; m < p.segments(); ++m) {
    const CMat um = segment_unitary(h0, p.ux[m], p.uy[m], p.dt);
    multiply_into(um, r.total_unitary, tmp);
    r.total_unitary = tmp;
    if (keep_segments) r.segment_unitaries.push_back(um);
  }
  if (rho_i) {
    check_dims(rho_i->matrix, r.total_unitary, "propagate");
    r.final_state = r.total_unitary * rho_i->matrix * r.total_unitary.adjoint();
  }
  return r;
}

double calibrate_tone_amplitude(const RotationModel& model, const SpinSystem& sys) {
  if (!(model.theta > 0.0 && model.theta <= std::numbers::pi))
    throw std::invalid_argument("tone calibration needs theta in (0, pi]");
  const double tau = model.tone_duration * kNsToUs;
  const double nominal = model.theta / (2.0 * tau);
  SpinSystem resonant = sys;
  resonant.detuning = 0.0;
  const CMat h0 = build_hamiltonian(resonant);
  const int m = std::max(1, static_cast<int>(std::lround(model.tone_duration / model.tone_dt)));
  const int q = resonant.qubits();
  const CMat zi = pauli_on('Z', 0, q);
  // Polarization of the m_I = up electron transition: (ZI + ZZ)/2 restricted.
  const CMat obs = 0.5 * cplx(1.0) * (zi + zi * pauli_on('Z', 1, q));
  const double target = std::cos(model.theta);
  const double norm = zi.re_trace_with_hermitian(obs);

  auto polarization = [&](double a) {
    CMat u = CMat::identity(resonant.dim());
    const double tc = 0.5 * m * model.tone_dt * kNsToUs;
    for (int i = 0; i < m; ++i) {
      const double t = (i + 0.5) * model.tone_dt * kNsToUs;
      const double ph = kTwoPi * model.tone_offset * (t - tc);
      u = segment_unitary(h0, a * std::cos(ph), a * std::sin(ph), model.tone_dt) * u;
    }
    const CMat rho = u * zi * u.adjoint();
    return rho.re_trace_with_hermitian(obs) / norm;
  };

  double lo = 0.0;
  double hi = nominal * std::min(2.0, std::numbers::pi / model.theta);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (polarization(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

CMat rotation_unitary(const InsertedRotation& rot, const SpinSystem& sys,
                      std::optional<double> tone_amplitude, const ControlPulse* envelope) {
  const int q = sys.qubits();
  const double angle = rot.sign * rot.model.theta;
  if (rot.model.kind == RotationKind::ideal) {
    const CMat sigma = pauli_on(rot.axis == Channel::x ? 'X' : 'Y', 0, q);
    // exp(-i angle sigma / 2) = cos(angle/2) I - i sin(angle/2) sigma
    CMat r = cplx(std::cos(angle / 2.0)) * CMat::identity(sys.dim());
    r += cplx(0.0, -std::sin(angle / 2.0)) * sigma;
    return r;
  }
  ControlPulse env;
  if (envelope) {
    env = *envelope;
  } else {
    const double amp = tone_amplitude ? *tone_amplitude : calibrate_tone_amplitude(rot.model, sys);
    env = two_tone_envelope(rot.model, rot.axis, rot.sign, amp);
  }
  const CMat u = propagate(env, sys).total_unitary;
  const CMat h0 = build_hamiltonian(sys);
  const CMat half_back = expm_hermitian(h0, -0.5 * env.duration_us());
  return half_back * u * half_back;
}

PropagationResult propagate(const PulseProgram& prog, const SpinSystem& sys, const PauliState* rho_i,
                            std::optional<double> tone_amplitude) {
  if (!prog.rotation) return propagate(prog.pulse, sys, rho_i);
  const ControlPulse& p = prog.pulse;
  p.validate();
  const int m = prog.rotation->after_segment;
  if (m < 1 || m > p.segments()) throw std::invalid_argument("rotation index out of range");
  const CMat h0 = build_hamiltonian(sys);
  PropagationResult r;
  r.total_unitary = CMat::identity(sys.dim());
  for (int s = 0; s < p.segments(); ++s) {
    if (s + 1 == m) {
      const CMat half = segment_unitary(h0, p.ux[s], p.uy[s], 0.5 * p.dt);
      r.total_unitary = half * rotation_unitary(*prog.rotation, sys, tone_amplitude) * half * r.total_unitary;
    } else {
      r.total_unitary = segment_unitary(h0, p.ux[s], p.uy[s], p.dt) * r.total_unitary;
    }
  }
  if (rho_i) {
    check_dims(rho_i->matrix, r.total_unitary, "propagate");
    r.final_state = r.total_unitary * rho_i->matrix * r.total_unitary.adjoint();
  }
  return r;
}

double state_fidelity(const CMat& rho_i, const CMat& rho_f, const CMat& u) {
  check_dims(rho_i, rho_f, "state_fidelity");
  check_dims(rho_i, u, "state_fidelity");
  const CMat evolved = u * rho_i * u.adjoint();
  return evolved.re_trace_with_hermitian(rho_f) / rho_i.dim();
}

double state_fidelity(const PauliState& rho_i, const PauliState& rho_f, const CMat& u) {
  return state_fidelity(rho_i.matrix, rho_f.matrix, u);
}

double ensemble_fidelity(const ControlPulse& p, const Ensemble& ensemble, const PauliState& rho_i,
                         const PauliState& rho_f) {
  if (ensemble.empty()) throw std::invalid_argument("ensemble_fidelity: empty ensemble");
  double f = 0.0;
  for (const auto& member : ensemble)
    f += member.weight * state_fidelity(rho_i, rho_f, propagate(p, member.system).total_unitary);
  return f;
}

GradientVector analytic_gradient(const ControlPulse& p, const SpinSystem& sys, const CMat& rho_i,
                                 const CMat& observable) {
  p.validate();
  const int n = sys.dim();
  check_dims(rho_i, CMat(n), "analytic_gradient");
  check_dims(observable, CMat(n), "analytic_gradient");
  const int segs = p.segments();
  const double dt = p.dt * kNsToUs;
  const CMat h0 = build_hamiltonian(sys);
  const CMat sx = pauli_on('X', 0, sys.qubits());
  const CMat sy = pauli_on('Y', 0, sys.qubits());

  std::vector<SegmentSpectrum> spectra(segs);
  std::vector<CMat> units(segs);
  for (int m = 0; m < segs; ++m) {
    const HermitianEig e = eig_hermitian(total_hamiltonian(h0, p.ux[m], p.uy[m]));
    spectra[m] = {e.values, e.vectors};
    CMat phase(n);
    for (int j = 0; j < n; ++j) phase.set(j, j, std::polar(1.0, -dt * e.values[j]));
    units[m] = e.vectors * phase * e.vectors.adjoint();
  }

  // Backward observables: obs_after[m] = B^dagger O B with B = U_M ... U_{m+1}.
  std::vector<CMat> obs_after(segs);
  obs_after[segs - 1] = observable;
  for (int m = segs - 1; m > 0; --m) obs_after[m - 1] = units[m].adjoint() * obs_after[m] * units[m];

  GradientVector g = GradientVector::zeros(segs);
  CMat rho = rho_i;  // state before segment m
  for (int m = 0; m < segs; ++m) {
    const CMat& v = spectra[m].v;
    const auto& ev = spectra[m].energies;
    const CMat rho_e = to_basis(v, rho);
    const CMat obs_e = to_basis(v, obs_after[m]);
    CMat eadj(n);
    for (int j = 0; j < n; ++j) eadj.set(j, j, std::polar(1.0, dt * ev[j]));
    const CMat w = rho_e * eadj * obs_e;  // rho' E^dagger O'
    const CMat sx_e = to_basis(v, sx);
    const CMat sy_e = to_basis(v, sy);
    cplx tx = 0.0, ty = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const cplx gam = divided_difference(ev[j], ev[k], dt);
        tx += gam * sx_e(j, k) * w(k, j);
        ty += gam * sy_e(j, k) * w(k, j);
      }
    }
    g.gx[m] = 2.0 * tx.real() / n;
    g.gy[m] = 2.0 * ty.real() / n;
    rho = units[m] * rho * units[m].adjoint();
  }
  return g;
}

GradientVector analytic_gradient(const ControlPulse& p, const SpinSystem& sys, const PauliState& rho_i,
                                 const PauliState& rho_f) {
  return analytic_gradient(p, sys, rho_i.matrix, rho_f.matrix);
}

GradientVector analytic_gradient(const ControlPulse& p, const Ensemble& ensemble, const PauliState& rho_i,
                                 const PauliState& rho_f) {
  if (ensemble.empty()) throw std::invalid_argument("analytic_gradient: empty ensemble");
  GradientVector total = GradientVector::zeros(p.segments());
  for (const auto& member : ensemble) {
    GradientVector g = analytic_gradient(p, member.system, rho_i, rho_f);
    g *= member.weight;
    total += g;
  }
  return total;
}

}  // namespace spinqoc

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

#include "spinqoc/spectrometer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "spinqoc/kernels.hpp"
#include "spinqoc/propagator.hpp"

namespace spinqoc {

namespace {

constexpr double kNsToUs = 1e-3;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// In-place complex DFT of length n; sign = FFTW_FORWARD (e^-i) or FFTW_BACKWARD (e^+i).
void dft(std::vector<cplx>& data, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_mutex());
  fftw_destroy_plan(plan);
}

// Frequency (MHz) of DFT bin k for length n and sample spacing dt (us).
double bin_frequency(int k, int n, double dt_us) {
  const int signed_k = k < n / 2 ? k : k - n;
  return signed_k / (n * dt_us);
}


}  // namespace

// ---------------------------------------------------------------------------
// TransferFunction
// ---------------------------------------------------------------------------

void TransferFunction::validate() const {
  if (freq_grid.size() < 2) throw std::invalid_argument("transfer function needs at least two grid points");
  if (freq_grid.size() != response.size())
    throw std::invalid_argument("transfer function grid and response differ in length");
  const double step = freq_grid[1] - freq_grid[0];
  if (!(step > 0.0)) throw std::invalid_argument("transfer function grid must be increasing");
  for (std::size_t i = 1; i < freq_grid.size(); ++i) {
    const double d = freq_grid[i] - freq_grid[i - 1];
    if (std::abs(d - step) > 1e-6 * step)
      throw std::invalid_argument("transfer function grid is not uniform near " + std::to_string(freq_grid[i]) +
                                  " MHz");
  }
  for (const auto& r : response)
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
      throw std::invalid_argument("transfer function response is not finite");
}

bool TransferFunction::covers(double f) const {
  const double tol = 1e-9 * (f_max() - f_min());
  return f >= f_min() - tol && f <= f_max() + tol;
}

cplx TransferFunction::at(double f) const {
  if (!covers(f)) return 0.0;
  const double step = freq_grid[1] - freq_grid[0];
  const double x = std::clamp((f - f_min()) / step, 0.0, static_cast<double>(freq_grid.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(x), freq_grid.size() - 2);
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * response[i] + w * response[i + 1];
}

bool TransferFunction::is_flat() const {
  return std::all_of(response.begin(), response.end(), [](cplx r) { return r == cplx(1.0, 0.0); });
}

TransferFunction TransferFunction::flat(double half_span_mhz, double step_mhz) {
  TransferFunction t;
  const int n = static_cast<int>(std::lround(2.0 * half_span_mhz / step_mhz));
  for (int i = 0; i <= n; ++i) {
    t.freq_grid.push_back(-half_span_mhz + i * step_mhz);
    t.response.emplace_back(1.0, 0.0);
  }
  t.fwhm_label = std::numeric_limits<double>::infinity();
  return t;
}

TransferFunction synthesize_transfer(double fwhm, TransferKind kind) {
  if (!(fwhm > 0.0)) throw std::invalid_argument("transfer FWHM must be > 0");
  TransferFunction t = TransferFunction::flat();
  t.fwhm_label = fwhm;
  for (std::size_t i = 0; i < t.freq_grid.size(); ++i) {
    const double f = t.freq_grid[i];
    if (kind == TransferKind::lorentzian) {
      const cplx d = cplx(1.0, 2.0 * f / fwhm);
      t.response[i] = 1.0 / (d * d);
    } else {
      const double half = 0.5 * fwhm * (f >= 0.0 ? 1.015 : 0.985);
      const double x = f / half;
      t.response[i] = std::polar(1.0 / (1.0 + x * x), -std::atan(2.0 * f / fwhm));
    }
  }
  return t;
}

TransferFunction load_transfer_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read transfer function " + path);
  TransferFunction t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double f, re, im;
    if (!(ls >> f >> re >> im)) {
      if (t.freq_grid.empty()) continue;  // header
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected freq,re,im");
    }
    t.freq_grid.push_back(f);
    t.response.emplace_back(re, im);
  }
  t.validate();
  return t;
}

void save_transfer_csv(const std::string& path, const TransferFunction& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "freq_mhz,re,im\n" << std::setprecision(17);
  for (std::size_t i = 0; i < t.freq_grid.size(); ++i)
    os << t.freq_grid[i] << ',' << t.response[i].real() << ',' << t.response[i].imag() << '\n';
}

int padded_length(int segments) {
  int n = 1;
  while (n < 4 * segments) n <<= 1;
  return n;
}

ControlPulse distort(const ControlPulse& p, const TransferFunction& t, double max_outside_energy) {
  p.validate();
  t.validate();
  const int m = p.segments();
  const int n = padded_length(m);
  const double dt_us = p.dt * kNsToUs;
  std::vector<cplx> z(n, 0.0);
  for (int i = 0; i < m; ++i) z[i] = {p.ux[i], p.uy[i]};
  dft(z, FFTW_FORWARD);
  double total = 0.0, outside = 0.0;
  for (int k = 0; k < n; ++k) {
    const double f = bin_frequency(k, n, dt_us);
    const double e = std::norm(z[k]);
    total += e;
    if (!t.covers(f)) outside += e;
    z[k] *= t.at(f);
  }
  if (total > 0.0 && outside > max_outside_energy * total)
    throw std::invalid_argument("pulse spectrum extends beyond the transfer function grid (" +
                                std::to_string(outside / total) + " of its energy)");
  dft(z, FFTW_BACKWARD);
  ControlPulse out = p;
  for (int i = 0; i < m; ++i) {
    out.ux[i] = z[i].real() / n;
    out.uy[i] = z[i].imag() / n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// DistortionOperator
// ---------------------------------------------------------------------------

DistortionOperator::DistortionOperator(const TransferFunction& t, int segments, double dt_ns)
    : identity_(false), m_(segments), dt_(dt_ns) {
  if (segments < 1) throw std::invalid_argument("distortion operator needs M >= 1");
  t.validate();
  const int n = padded_length(segments);
  const double dt_us = dt_ns * kNsToUs;
  bool covered = true;
  std::vector<cplx> h(n);
  for (int k = 0; k < n; ++k) {
    const double f = bin_frequency(k, n, dt_us);
    covered = covered && t.covers(f);
    h[k] = t.at(f);
  }
  if (t.is_flat() && covered) {
    identity_ = true;
    return;
  }
  dft(h, FFTW_BACKWARD);
  for (auto& v : h) v /= static_cast<double>(n);
  const std::size_t mm = static_cast<std::size_t>(m_) * m_;
  kr_.resize(mm);
  ki_.resize(mm);
  khr_.resize(mm);
  khi_.resize(mm);
  for (int col = 0; col < m_; ++col) {
    for (int row = 0; row < m_; ++row) {
      const cplx k = h[((row - col) % n + n) % n];
      kr_[static_cast<std::size_t>(col) * m_ + row] = k.real();
      ki_[static_cast<std::size_t>(col) * m_ + row] = k.imag();
      // K^H(col, row) = conj K(row, col), stored column-major at [row][col].
      khr_[static_cast<std::size_t>(row) * m_ + col] = k.real();
      khi_[static_cast<std::size_t>(row) * m_ + col] = -k.imag();
    }
  }
}

DistortionOperator DistortionOperator::identity(int segments, double dt_ns) {
  DistortionOperator d;
  d.m_ = segments;
  d.dt_ = dt_ns;
  return d;
}

cplx DistortionOperator::entry(int row, int col) const {
  if (identity_) return row == col ? 1.0 : 0.0;
  const std::size_t i = static_cast<std::size_t>(col) * m_ + row;
  return {kr_[i], ki_[i]};
}

ControlPulse DistortionOperator::apply(const ControlPulse& p) const {
  if (p.segments() != m_ && !identity_)
    throw std::invalid_argument("distortion operator built for M=" + std::to_string(m_) + ", pulse has " +
                                std::to_string(p.segments()));
  if (identity_) return p;
  ControlPulse out = p;
  kernels::active().cgemv(m_, m_, kr_.data(), ki_.data(), p.ux.data(), p.uy.data(), out.ux.data(),
                          out.uy.data());
  return out;
}

GradientVector DistortionOperator::transpose_apply(const GradientVector& g) const {
  if (identity_) return g;
  if (g.segments() != m_) throw std::invalid_argument("gradient length does not match distortion operator");
  GradientVector out = GradientVector::zeros(m_);
  kernels::active().cgemv(m_, m_, khr_.data(), khi_.data(), g.gx.data(), g.gy.data(), out.gx.data(),
                          out.gy.data());
  return out;
}

// ---------------------------------------------------------------------------
// Noise, quality, budget
// ---------------------------------------------------------------------------

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t component,
                         std::uint64_t tag) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t v : {seed, iteration, component, tag}) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  rng_.seed(seq);
}

double NoiseStream::gaussian(double sigma) {
  if (sigma <= 0.0) return 0.0;
  return sigma * normal_(rng_);
}

std::string gate_name(GateKind g) {
  switch (g) {
    case GateKind::gate1: return "gate1";
    case GateKind::gate2: return "gate2";
    case GateKind::state: return "state";
  }
  return "?";
}

GateKind parse_gate(const std::string& s) {
  if (s == "gate1" || s == "1") return GateKind::gate1;
  if (s == "gate2" || s == "2") return GateKind::gate2;
  if (s == "state") return GateKind::state;
  throw std::invalid_argument("unknown gate '" + s + "' (expected gate1, gate2 or state)");
}

double control_quality(const SignalPair& s, GateKind gate) {
  switch (gate) {
    case GateKind::gate1: return 0.5 * (s.sl + s.sr);
    case GateKind::gate2: return 0.5 * (s.sl - s.sr);
    case GateKind::state: return s.sl;
  }
  return 0.0;
}

double propagate_error(double sl, double sr, double ref_l, double ref_r, double dsl, double dsr,
                       double dref_l, double dref_r) {
  if (ref_l == 0.0 || ref_r == 0.0) throw std::invalid_argument("propagate_error: zero reference signal");
  // r^2 (e_s^2 + e_ref^2) written without dividing by the signal itself.
  const double tl = std::pow(dsl / ref_l, 2) + std::pow(sl * dref_l / (ref_l * ref_l), 2);
  const double tr = std::pow(dsr / ref_r, 2) + std::pow(sr * dref_r / (ref_r * ref_r), 2);
  return std::sqrt(tl + tr);
}

ExperimentBudget charge_budget(const ExperimentBudget& b, int n_drives, int segments, int p_terms) {
  if (n_drives < 0 || segments < 0 || p_terms < 0) throw std::invalid_argument("budget terms must be >= 0");
  ExperimentBudget out = b;
  out.experiments_per_iteration = 4LL * n_drives * segments * p_terms;
  out.cumulative += out.experiments_per_iteration;
  return out;
}

// ---------------------------------------------------------------------------
// VirtualSpectrometer
// ---------------------------------------------------------------------------

namespace {

SpinSystem resonant_system(const Ensemble& e) {
  SpinSystem s = e.front().system;
  s.detuning = 0.0;
  return s;
}

// Transition frequencies (MHz) of the two allowed lines of a resonant member.
std::pair<double, double> allowed_lines(const SpinSystem& sys) {
  const Eigenstructure es = diagonalize(sys);
  const int half = sys.dim() / 2;
  return {(es.diagonal_h0[0] - es.diagonal_h0[half]) / kTwoPi,
          (es.diagonal_h0[half - 1] - es.diagonal_h0[sys.dim() - 1]) / kTwoPi};
}

// (E1 +/- E2 Z_nuc)/2 for electron operator E on an n-qubit space.
CMat selective_observable(char electron_axis, bool left, int q) {
  const CMat e = pauli_on(electron_axis, 0, q);
  const CMat ez = e * pauli_on('Z', 1, q);
  return cplx(0.5) * (left ? e + ez : e - ez);
}

// Same operator with the product states replaced by the eigenstates of `sys`
// (level k <-> product state k), i.e. V O V^dagger.
CMat eigenframe_observable(char electron_axis, bool left, const CMat& v, int q) {
  return v * selective_observable(electron_axis, left, q) * v.adjoint();
}

CMat tone_propagator(const CMat& h0, double amp, double freq, double duration_ns, double dt_ns) {
  const int m = std::max(1, static_cast<int>(std::lround(duration_ns / dt_ns)));
  const double tc = 0.5 * m * dt_ns * kNsToUs;
  CMat u = CMat::identity(h0.dim());
  CMat tmp(h0.dim());
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) * dt_ns * kNsToUs;
    const double ph = kTwoPi * freq * (t - tc);
    multiply_into(segment_unitary(h0, amp * std::cos(ph), amp * std::sin(ph), dt_ns), u, tmp);
    u = tmp;
  }
  return u;
}

}  // namespace

double square_pulse_reference(const Ensemble& ensemble, bool left, double duration_ns, double dt_ns) {
  if (ensemble.empty()) throw std::invalid_argument("square_pulse_reference: empty ensemble");
  const SpinSystem base = resonant_system(ensemble);
  const auto [fl, fr] = allowed_lines(base);
  RotationModel model;
  model.theta = std::numbers::pi / 2.0;
  model.tone_offset = fl;
  model.tone_duration = duration_ns;
  model.tone_dt = dt_ns;
  const double amp = calibrate_tone_amplitude(model, base);
  const int q = base.qubits();
  const CMat zi = pauli_on('Z', 0, q);
  const CMat v = diagonalize(base).eigenbasis;
  const CMat ox = eigenframe_observable('X', left, v, q);
  const CMat oy = eigenframe_observable('Y', left, v, q);
  const double norm = pauli_on('X', 0, q).re_trace_with_hermitian(selective_observable('X', left, q));
  double s = 0.0;
  for (const auto& member : ensemble) {
    const CMat u = tone_propagator(build_hamiltonian(member.system), amp, left ? fl : fr, duration_ns, dt_ns);
    const CMat rho = u * zi * u.adjoint();
    s += member.weight * std::hypot(rho.re_trace_with_hermitian(ox), rho.re_trace_with_hermitian(oy)) / norm;
  }
  return s;
}

VirtualSpectrometer::VirtualSpectrometer(Ensemble truth, DistortionOperator transfer, MeasurementModel noise,
                                         TransferFunction transfer_shape)
    : ensemble_(std::move(truth)),
      transfer_(std::move(transfer)),
      transfer_shape_(std::move(transfer_shape)),
      noise_(noise) {
  if (ensemble_.empty()) throw std::invalid_argument("spectrometer needs a non-empty ensemble");
  if (noise_.sigma < 0.0 || !std::isfinite(noise_.sigma))
    throw std::invalid_argument("noise sigma must be finite and >= 0");
  qubits_ = ensemble_.front().system.qubits();
  for (const auto& m : ensemble_) {
    if (m.system.qubits() != qubits_) throw std::invalid_argument("ensemble members differ in size");
    h0_.push_back(build_hamiltonian(m.system));
  }
  // Detuning commutes with the hyperfine blocks, so one frame serves every member.
  frame_ = diagonalize(resonant_system(ensemble_)).eigenbasis;
  gate1_ref_ = {square_pulse_reference(ensemble_, true), square_pulse_reference(ensemble_, false)};
}

double VirtualSpectrometer::tone_amplitude(const RotationModel& model) const {
  return calibrate_tone_amplitude(model, resonant_system(ensemble_));
}

VirtualSpectrometer::Readout VirtualSpectrometer::readout_for(const Target& target) const {
  Readout r;
  const int q = qubits_;
  switch (target.kind) {
    case GateKind::gate2: {
      // ZI commutes with the eigenframe, so the thermal reference is unchanged.
      r.rho_i = pauli_on('Z', 0, q);
      r.obs_l = eigenframe_observable('Z', true, frame_, q);
      r.obs_r = eigenframe_observable('Z', false, frame_, q);
      r.norm_l = r.rho_i.re_trace_with_hermitian(r.obs_l);
      r.norm_r = r.rho_i.re_trace_with_hermitian(r.obs_r);
      break;
    }
    case GateKind::gate1: {
      r.rho_i = pauli_on('Z', 0, q);
      r.obs_l = eigenframe_observable('X', true, frame_, q);
      r.obs_r = eigenframe_observable('X', false, frame_, q);
      const CMat xi = pauli_on('X', 0, q);
      r.norm_l = xi.re_trace_with_hermitian(selective_observable('X', true, q)) * gate1_ref_.sl;
      r.norm_r = xi.re_trace_with_hermitian(selective_observable('X', false, q)) * gate1_ref_.sr;
      break;
    }
    case GateKind::state: {
      r.rho_i = widen(pauli_state(target.initial), q).matrix;
      r.obs_l = widen(pauli_state(target.final_state), q).matrix;
      r.obs_r = CMat(r.rho_i.dim());
      r.norm_l = static_cast<double>(r.rho_i.dim());
      r.norm_r = 1.0;
      break;
    }
  }
  if (r.norm_l == 0.0 || r.norm_r == 0.0) throw std::runtime_error("zero readout reference");
  return r;
}

SignalPair VirtualSpectrometer::signals_from_unitaries(const std::vector<CMat>& unitaries,
                                                       const Readout& r) const {
  SignalPair s;
  for (std::size_t i = 0; i < ensemble_.size(); ++i) {
    const CMat rho = unitaries[i] * r.rho_i * unitaries[i].adjoint();
    s.sl += ensemble_[i].weight * rho.re_trace_with_hermitian(r.obs_l) / r.norm_l;
    s.sr += ensemble_[i].weight * rho.re_trace_with_hermitian(r.obs_r) / r.norm_r;
  }
  return s;
}

SignalPair VirtualSpectrometer::ideal_signals_distorted(const ControlPulse& distorted, const Target& target) const {
  distorted.validate();
  const Readout r = readout_for(target);
  std::vector<CMat> units;
  units.reserve(ensemble_.size());
  CMat tmp(h0_.front().dim());
  for (const auto& h0 : h0_) {
    CMat u = CMat::identity(h0.dim());
    for (int s = 0; s < distorted.segments(); ++s) {
      multiply_into(segment_unitary(h0, distorted.ux[s], distorted.uy[s], distorted.dt), u, tmp);
      u = tmp;
    }
    units.push_back(u);
  }
  return signals_from_unitaries(units, r);
}

SignalPair VirtualSpectrometer::ideal_signals(const ControlPulse& programmed, const Target& target) const {
  return ideal_signals_distorted(transfer_.apply(programmed), target);
}

SignalPair VirtualSpectrometer::add_noise(SignalPair s, NoiseStream& stream) const {
  s.sl += stream.gaussian(noise_.sigma);
  s.sr += stream.gaussian(noise_.sigma);
  return s;
}

SignalPair VirtualSpectrometer::measure_signals(const ControlPulse& programmed, const Target& target,
                                                NoiseStream& stream) const {
  return add_noise(ideal_signals(programmed, target), stream);
}

double VirtualSpectrometer::true_quality(const ControlPulse& programmed, const Target& target) const {
  return control_quality(ideal_signals(programmed, target), target.kind);
}

std::vector<SignalPair> VirtualSpectrometer::rotation_scan(const ControlPulse& programmed, const Target& target,
                                                           const RotationModel& model) const {
  const ControlPulse p = transfer_.apply(programmed);
  p.validate();
  const int segs = p.segments();
  const int n = h0_.front().dim();
  const Readout r = readout_for(target);
  std::vector<SignalPair> out(4 * static_cast<std::size_t>(segs));

  // Rotation envelopes (two-tone only), distorted on their own time grid.
  std::optional<double> amp;
  ControlPulse envelopes[2][2];
  if (model.kind == RotationKind::two_tone) {
    amp = tone_amplitude(model);
    const bool distorted = !transfer_shape_.is_flat();
    for (int axis = 0; axis < 2; ++axis) {
      for (int si = 0; si < 2; ++si) {
        ControlPulse env = two_tone_envelope(model, axis == 0 ? Channel::x : Channel::y, si == 0 ? 1 : -1, *amp);
        if (distorted) env = DistortionOperator(transfer_shape_, env.segments(), env.dt).apply(env);
        envelopes[axis][si] = env;
      }
    }
  }

  std::vector<CMat> halves(segs), fwd(segs), back_l(segs), back_r(segs);
  CMat tmp(n);
  for (std::size_t mi = 0; mi < ensemble_.size(); ++mi) {
    const CMat& h0 = h0_[mi];
    const SpinSystem& sys = ensemble_[mi].system;
    const double w = ensemble_[mi].weight;
    for (int s = 0; s < segs; ++s) halves[s] = segment_unitary(h0, p.ux[s], p.uy[s], 0.5 * p.dt);
    // fwd[s]: state at the midpoint of segment s (0-based), rotation index m = s+1.
    CMat rho = r.rho_i;
    for (int s = 0; s < segs; ++s) {
      multiply_into(halves[s], rho, tmp);
      fwd[s] = tmp * halves[s].adjoint();
      multiply_into(halves[s], fwd[s], tmp);
      rho = tmp * halves[s].adjoint();
    }
    // back[s]: observable pulled back to the midpoint of segment s.
    CMat ol = r.obs_l, orr = r.obs_r;
    for (int s = segs - 1; s >= 0; --s) {
      const CMat hd = halves[s].adjoint();
      multiply_into(hd, ol, tmp);
      back_l[s] = tmp * halves[s];
      multiply_into(hd, orr, tmp);
      back_r[s] = tmp * halves[s];
      multiply_into(hd, back_l[s], tmp);
      ol = tmp * halves[s];
      multiply_into(hd, back_r[s], tmp);
      orr = tmp * halves[s];
    }
    for (int axis = 0; axis < 2; ++axis) {
      for (int si = 0; si < 2; ++si) {
        InsertedRotation rot{1, axis == 0 ? Channel::x : Channel::y, si == 0 ? 1 : -1, model};
        const CMat rmat = rotation_unitary(rot, sys, amp, amp ? &envelopes[axis][si] : nullptr);
        const CMat rdag = rmat.adjoint();
        for (int s = 0; s < segs; ++s) {
          multiply_into(rmat, fwd[s], tmp);
          const CMat rotated = tmp * rdag;
          SignalPair& sp = out[(static_cast<std::size_t>(axis) * segs + s) * 2 + si];
          sp.sl += w * rotated.re_trace_with_hermitian(back_l[s]) / r.norm_l;
          sp.sr += w * rotated.re_trace_with_hermitian(back_r[s]) / r.norm_r;
        }
      }
    }
  }
  return out;
}

CMat VirtualSpectrometer::initial_state(const Target& target) const { return readout_for(target).rho_i; }

CMat VirtualSpectrometer::quality_observable(const Target& target) const {
  const Readout r = readout_for(target);
  CMat ol = r.obs_l;
  ol *= cplx(1.0 / r.norm_l);
  CMat orr = r.obs_r;
  orr *= cplx(1.0 / r.norm_r);
  switch (target.kind) {
    case GateKind::gate1: return cplx(0.5) * (ol + orr);
    case GateKind::gate2: return cplx(0.5) * (ol - orr);
    case GateKind::state: return ol;
  }
  return ol;
}

GradientVector VirtualSpectrometer::exact_gradient(const ControlPulse& programmed, const Target& target) const {
  const ControlPulse p = transfer_.apply(programmed);
  const Readout r = readout_for(target);
  CMat obs = quality_observable(target);
  // analytic_gradient normalizes by the dimension; undo it.
  obs *= cplx(static_cast<double>(obs.dim()));
  GradientVector g = GradientVector::zeros(p.segments());
  for (const auto& member : ensemble_) {
    GradientVector gm = analytic_gradient(p, member.system, r.rho_i, obs);
    gm *= member.weight;
    g += gm;
  }
  return transfer_.transpose_apply(g);
}

}  // namespace spinqoc

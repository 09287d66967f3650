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

#include "spinqoc/pulse.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace spinqoc {

void ControlPulse::validate() const {
  if (ux.empty()) throw std::invalid_argument("pulse must have at least one segment");
  if (ux.size() != uy.size())
    throw std::invalid_argument("pulse channels differ in length: ux=" + std::to_string(ux.size()) +
                                " uy=" + std::to_string(uy.size()));
  if (!(dt > 0.0)) throw std::invalid_argument("pulse dt must be > 0");
}

ControlPulse ControlPulse::zeros(int m, double dt) { return square(m, dt, 0.0, 0.0); }

ControlPulse ControlPulse::square(int m, double dt, double ax, double ay) {
  if (m < 1) throw std::invalid_argument("pulse must have at least one segment");
  ControlPulse p;
  p.dt = dt;
  p.ux.assign(m, ax);
  p.uy.assign(m, ay);
  return p;
}

ControlPulse ControlPulse::tone(int m, double dt, double freq_mhz, double amp, double phase) {
  ControlPulse p = zeros(m, dt);
  for (int i = 0; i < m; ++i) {
    const double ph = 2.0 * std::numbers::pi * freq_mhz * (i + 0.5) * dt * 1e-3 + phase;
    p.ux[i] = amp * std::cos(ph);
    p.uy[i] = amp * std::sin(ph);
  }
  return p;
}

double GradientVector::dot(const GradientVector& o) const {
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) s += gx[i] * o.gx[i] + gy[i] * o.gy[i];
  return s;
}

double GradientVector::norm() const { return std::sqrt(dot(*this)); }

bool GradientVector::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  return std::all_of(gx.begin(), gx.end(), ok) && std::all_of(gy.begin(), gy.end(), ok);
}

GradientVector& GradientVector::operator+=(const GradientVector& o) {
  for (std::size_t i = 0; i < gx.size(); ++i) {
    gx[i] += o.gx[i];
    gy[i] += o.gy[i];
  }
  return *this;
}

GradientVector& GradientVector::operator*=(double s) {
  for (auto& v : gx) v *= s;
  for (auto& v : gy) v *= s;
  return *this;
}

double direction_cosine(const GradientVector& a, const GradientVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

BasisSet make_canonical_basis(int m) {
  if (m < 1) throw std::invalid_argument("basis length must be >= 1");
  BasisSet b;
  b.kind = BasisKind::canonical;
  b.length = m;
  for (int k = 0; k < m; ++k) {
    std::vector<double> v(m, 0.0);
    v[k] = 1.0;
    b.vectors.push_back(std::move(v));
  }
  return b;
}

std::vector<int> hadamard_blocks(int m) {
  if (m < 1) throw std::invalid_argument("linear basis needs M >= 1, got " + std::to_string(m));
  std::vector<int> blocks;
  for (int bit = 30; bit >= 0; --bit) {
    if (m & (1 << bit)) blocks.push_back(1 << bit);
  }
  return blocks;
}

BasisSet make_linear_basis(int m) {
  BasisSet b;
  b.kind = BasisKind::linear_hadamard;
  b.length = m;
  int offset = 0;
  for (int size : hadamard_blocks(m)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(size));
    // Sylvester ordering: H[r][c] = (-1)^popcount(r & c).
    for (int r = 0; r < size; ++r) {
      std::vector<double> v(m, 0.0);
      for (int c = 0; c < size; ++c) {
        const bool odd = std::popcount(static_cast<unsigned>(r & c)) % 2 == 1;
        v[offset + c] = odd ? -scale : scale;
      }
      b.vectors.push_back(std::move(v));
    }
    offset += size;
  }
  return b;
}

double slepian_kernel(int l, int m, double w) {
  const int d = l - m;
  if (d == 0) return 2.0 * w;
  const double x = 2.0 * w * d;
  // sin(pi x) vanishes exactly at integer x; avoid the 1e-16 residue of std::sin.
  if (x == std::nearbyint(x)) return 0.0;
  return std::sin(std::numbers::pi * x) / (std::numbers::pi * d);
}

// The sequences are computed from the symmetric tridiagonal matrix that
// commutes with the sinc kernel; its spectrum is well separated, unlike the
// kernel's, whose leading eigenvalues cluster at 1. Eigenvalues of the kernel
// are then recovered as Rayleigh quotients.
BasisSet make_slepian_basis(int n, double w, std::optional<int> count) {
  if (n < 1) throw std::invalid_argument("Slepian length must be >= 1");
  if (!(w > 0.0 && w <= 0.5))
    throw std::invalid_argument("Slepian half-bandwidth W must lie in (0, 0.5], got " + std::to_string(w));
  const int k = count.value_or(static_cast<int>(std::lround(2.0 * n * w)));
  if (k < 1 || k > n)
    throw std::invalid_argument("Slepian count must lie in [1, N], got " + std::to_string(k));

  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  const double cw = std::cos(2.0 * std::numbers::pi * w);
  for (int l = 0; l < n; ++l) {
    const double c = (n - 1 - 2.0 * l) / 2.0;
    diag(l) = c * c * cw;
  }
  for (int l = 1; l < n; ++l) sub(l - 1) = l * (n - l) / 2.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Slepian tridiagonal solve failed");

  Eigen::MatrixXd kernel(n, n);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m) kernel(l, m) = slepian_kernel(l, m, w);

  BasisSet b;
  b.kind = BasisKind::slepian;
  b.length = n;
  b.slepian_n = n;
  b.slepian_w = w;
  for (int order = 0; order < k; ++order) {
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - order);
    v.normalize();
    // Even orders have positive sum, odd orders a positive first moment.
    double ref = 0.0;
    for (int l = 0; l < n; ++l) ref += (order % 2 == 0 ? 1.0 : (n - 1 - 2.0 * l)) * v(l);
    if (ref < 0.0 || (ref == 0.0 && v(0) < 0.0)) v = -v;
    double lambda = v.dot(kernel * v);
    // Rayleigh quotients below rounding level are reported as the smallest
    // positive double so every eigenvalue stays in (0, 1].
    lambda = std::clamp(lambda, std::numeric_limits<double>::min(), 1.0);
    b.eigenvalues.push_back(lambda);
    b.vectors.emplace_back(v.data(), v.data() + n);
  }
  // The commuting matrix orders sequences by concentration; enforce it.
  for (int i = 1; i < k; ++i) b.eigenvalues[i] = std::min(b.eigenvalues[i], b.eigenvalues[i - 1]);
  return b;
}

ControlPulse update_pulse(const ControlPulse& p, const GradientVector& g, double c) {
  if (g.segments() != p.segments() || g.gy.size() != p.uy.size())
    throw std::invalid_argument("gradient length does not match pulse");
  ControlPulse out = p;
  for (int i = 0; i < p.segments(); ++i) {
    out.ux[i] += c * g.gx[i];
    out.uy[i] += c * g.gy[i];
  }
  if (out.max_amp) {
    const double lim = *out.max_amp;
    for (auto& v : out.ux) v = std::clamp(v, -lim, lim);
    for (auto& v : out.uy) v = std::clamp(v, -lim, lim);
  }
  return out;
}

ControlPulse perturb_along(const ControlPulse& p, std::span<const double> v, double delta,
                           Channel channel, int sign) {
  if (static_cast<int>(v.size()) != p.segments())
    throw std::invalid_argument("basis vector length does not match pulse");
  ControlPulse out = p;
  auto& u = out.channel(channel);
  const double s = sign >= 0 ? delta : -delta;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += s * v[i];
  return out;
}

PulseProgram insert_rotation(const ControlPulse& p, int m, Channel axis, int sign,
                             const RotationModel& model) {
  if (m < 1 || m > p.segments())
    throw std::invalid_argument("rotation segment index " + std::to_string(m) + " outside [1, " +
                                std::to_string(p.segments()) + "]");
  return PulseProgram{p, InsertedRotation{m, axis, sign >= 0 ? 1 : -1, model}};
}

ControlPulse two_tone_envelope(const RotationModel& model, Channel axis, int sign,
                               double tone_amplitude) {
  const int m = std::max(1, static_cast<int>(std::lround(model.tone_duration / model.tone_dt)));
  ControlPulse p = ControlPulse::zeros(m, model.tone_dt);
  const double tc = 0.5 * m * model.tone_dt * 1e-3;
  const double s = sign >= 0 ? 1.0 : -1.0;
  auto& u = p.channel(axis);
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) * model.tone_dt * 1e-3;
    u[i] = s * 2.0 * tone_amplitude * std::cos(2.0 * std::numbers::pi * model.tone_offset * (t - tc));
  }
  return p;
}

void write_pulse(std::ostream& os, const ControlPulse& p) {
  p.validate();
  const auto old = os.precision();
  os << std::setprecision(17);
  os << "# dt=" << p.dt << " M=" << p.segments() << '\n';
  for (int i = 0; i < p.segments(); ++i) os << p.ux[i] << ' ' << p.uy[i] << '\n';
  os.precision(old);
}

ControlPulse read_pulse(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("pulse file: missing header");
  double dt = 0.0;
  int m = 0;
  {
    std::istringstream hs(header);
    std::string hash, dt_field, m_field;
    hs >> hash >> dt_field >> m_field;
    if (hash != "#" || dt_field.rfind("dt=", 0) != 0 || m_field.rfind("M=", 0) != 0)
      throw std::runtime_error("pulse file: malformed header '" + header + "'");
    dt = std::stod(dt_field.substr(3));
    m = std::stoi(m_field.substr(2));
  }
  ControlPulse p = ControlPulse::zeros(m, dt);
  std::string line;
  for (int i = 0; i < m; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("pulse file: expected " + std::to_string(m) + " rows");
    std::istringstream ls(line);
    if (!(ls >> p.ux[i] >> p.uy[i]))
      throw std::runtime_error("pulse file: bad row " + std::to_string(i + 2) + ": '" + line + "'");
  }
  return p;
}

void save_pulse(const std::string& path, const ControlPulse& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_pulse(os, p);
}

ControlPulse load_pulse(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_pulse(is);
}

}  // namespace spinqoc

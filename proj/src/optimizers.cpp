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

#include "spinqoc/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "spinqoc/propagator.hpp"

namespace spinqoc {

namespace {

constexpr std::uint64_t kGradientTag = 0;
constexpr std::uint64_t kRecordTag = 1;

// Runs body(i) for i in [0, n) on up to `threads` workers with a static split.
template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double measured_quality(const VirtualSpectrometer& spect, const ControlPulse& p, const Target& target,
                        std::uint64_t seed, std::uint64_t iteration, std::uint64_t component, std::uint64_t tag) {
  NoiseStream stream(seed, iteration, component, tag);
  return control_quality(spect.measure_signals(p, target, stream), target.kind);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::grape: return "grape";
    case Method::hqca: return "hqca";
    case Method::fd: return "fd";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "grape") return Method::grape;
  if (s == "hqca") return Method::hqca;
  if (s == "fd") return Method::fd;
  throw std::invalid_argument("unknown method '" + s + "' (expected grape, hqca or fd)");
}

void OptimizerConfig::validate() const {
  if (method == Method::fd && !(delta_u > 0.0) && !(delta_sigmas > 0.0))
    throw std::invalid_argument("fd needs delta_u > 0 or delta_sigmas > 0");
  if (!(delta_max > 0.0)) throw std::invalid_argument("delta_max must be > 0");
  if (stop_window < 1) throw std::invalid_argument("stop_window must be >= 1");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (c0 <= 0.0 && !(first_step > 0.0 && first_gain > 0.0))
    throw std::invalid_argument("auto c0 needs first_step > 0 and first_gain > 0");
  if (method == Method::hqca && !(rotation.theta > 0.0 && rotation.theta <= std::numbers::pi))
    throw std::invalid_argument("rotation angle must lie in (0, pi]");
}

double learning_rate_schedule(double fidelity, double c0) {
  if (fidelity < 0.95) return c0;
  if (fidelity < 0.97) return 0.5 * c0;
  if (fidelity < 0.98) return 0.25 * c0;
  return 0.125 * c0;
}

GradientVector hqca_gradient(const ControlPulse& p, const VirtualSpectrometer& spect, const Target& target,
                             const RotationModel& rotation, std::uint64_t seed, std::uint64_t iteration) {
  const int m = p.segments();
  const std::vector<SignalPair> scan = spect.rotation_scan(p, target, rotation);
  const double dt_us = p.dt * 1e-3;
  GradientVector g = GradientVector::zeros(m);
  for (int axis = 0; axis < 2; ++axis) {
    auto& out = g.channel(axis == 0 ? Channel::x : Channel::y);
    for (int s = 0; s < m; ++s) {
      const std::size_t base = (static_cast<std::size_t>(axis) * m + s) * 2;
      NoiseStream plus(seed, iteration, base, kGradientTag);
      NoiseStream minus(seed, iteration, base + 1, kGradientTag);
      const double fp = control_quality(spect.add_noise(scan[base], plus), target.kind);
      const double fm = control_quality(spect.add_noise(scan[base + 1], minus), target.kind);
      out[s] = dt_us * (fp - fm);
    }
  }
  return g;
}

GradientVector fd_gradient(const ControlPulse& p, const VirtualSpectrometer& spect, const Target& target,
                           const BasisSet& basis, double delta_u, std::uint64_t seed, std::uint64_t iteration,
                           int threads) {
  if (!(delta_u > 0.0)) throw std::invalid_argument("fd_gradient: delta_u must be > 0");
  const int m = p.segments();
  const BasisSet& b = basis.vectors.empty() ? make_canonical_basis(m) : basis;
  if (b.vectors.empty()) throw std::invalid_argument("fd_gradient: empty basis");
  for (const auto& v : b.vectors)
    if (static_cast<int>(v.size()) != m) throw std::invalid_argument("fd_gradient: basis length does not match pulse");
  const int k = static_cast<int>(b.size());
  // Component index (channel * K + k) * 2 + (sign < 0); x channel first.
  std::vector<double> f(4 * static_cast<std::size_t>(k));
  parallel_for(4 * k, threads, [&](int idx) {
    const int sign = idx % 2 == 0 ? 1 : -1;
    const int kk = (idx / 2) % k;
    const Channel ch = idx / (2 * k) == 0 ? Channel::x : Channel::y;
    const ControlPulse q = perturb_along(p, b.vectors[kk], delta_u, ch, sign);
    f[idx] = measured_quality(spect, q, target, seed, iteration, idx, kGradientTag);
  });
  GradientVector g = GradientVector::zeros(m);
  for (int c = 0; c < 2; ++c) {
    auto& out = g.channel(c == 0 ? Channel::x : Channel::y);
    for (int kk = 0; kk < k; ++kk) {
      const std::size_t i = (static_cast<std::size_t>(c) * k + kk) * 2;
      const double gk = (f[i] - f[i + 1]) / (2.0 * delta_u);
      for (int s = 0; s < m; ++s) out[s] += gk * b.vectors[kk][s];
    }
  }
  return g;
}

GradientVector grape_gradient(const ControlPulse& p, const VirtualSpectrometer& model, const Target& target) {
  return model.exact_gradient(p, target);
}

long long experiments_per_gradient(const OptimizerConfig& cfg, int segments, const Target& target) {
  const long long terms = target.pauli_terms();
  switch (cfg.method) {
    case Method::grape: return 0;
    case Method::hqca: return charge_budget({}, 1, segments, target.pauli_terms()).experiments_per_iteration;
    case Method::fd: {
      const long long k = cfg.basis.vectors.empty() ? segments : static_cast<long long>(cfg.basis.size());
      return 2LL * 2LL * k * terms;
    }
  }
  return 0;
}

double calibrate_learning_rate(const OptimizerConfig& cfg, const VirtualSpectrometer& spect, const Target& target,
                               const ControlPulse& initial) {
  const VirtualSpectrometer quiet = spect.noiseless();
  GradientVector g;
  switch (cfg.method) {
    case Method::grape: g = grape_gradient(initial, quiet, target); break;
    case Method::hqca: g = hqca_gradient(initial, quiet, target, cfg.rotation); break;
    case Method::fd: g = fd_gradient(initial, quiet, target, cfg.basis, cfg.delta_u, 0, 0, cfg.threads); break;
  }
  const double n = g.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::runtime_error("cannot calibrate the learning rate: first gradient norm is " + std::to_string(n));
  return cfg.calibration == OptimizerConfig::Calibration::gain ? cfg.first_gain / (n * n) : cfg.first_step / n;
}

double resolve_delta(const OptimizerConfig& cfg, const VirtualSpectrometer& spect, const Target& target,
                     const ControlPulse& initial) {
  if (cfg.delta_u > 0.0) return cfg.delta_u;
  const double sigma = spect.noise().sigma;
  if (sigma == 0.0) return 1.0;
  const double n = spect.noiseless().exact_gradient(initial, target).norm();
  if (!(n > 0.0)) throw std::runtime_error("cannot choose delta_u: zero gradient at the initial pulse");
  return std::min(cfg.delta_sigmas * sigma / n, cfg.delta_max);
}

std::vector<IterationRecord> run_optimization(const OptimizerConfig& cfg_in, const VirtualSpectrometer& spect,
                                              const Target& target, const ControlPulse& initial,
                                              const VirtualSpectrometer* truth) {
  cfg_in.validate();
  initial.validate();
  OptimizerConfig cfg = cfg_in;
  if (cfg.method == Method::fd) cfg.delta_u = resolve_delta(cfg_in, spect, target, initial);
  const bool closed = cfg.method != Method::grape;
  const VirtualSpectrometer& evaluator = (!closed && truth) ? *truth : spect;
  const long long per_iter = experiments_per_gradient(cfg, initial.segments(), target);

  auto record_fidelity = [&](const ControlPulse& p, int q) {
    if (!closed) return spect.true_quality(p, target);
    double s = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) s += measured_quality(spect, p, target, cfg.seed, q, r, kRecordTag);
    return s / cfg.repeats;
  };

  std::vector<IterationRecord> history;
  IterationRecord rec0;
  rec0.pulse = initial;
  rec0.fidelity = record_fidelity(initial, 0);
  rec0.true_fidelity = evaluator.true_quality(initial, target);
  history.push_back(rec0);

  ControlPulse pulse = initial;
  const double c0 = cfg.c0 > 0.0 ? cfg.c0 : calibrate_learning_rate(cfg, spect, target, initial);
  long long cumulative = 0;
  for (int q = 1; q <= cfg.max_iters; ++q) {
    GradientVector g;
    switch (cfg.method) {
      case Method::grape: g = grape_gradient(pulse, spect, target); break;
      case Method::hqca: g = hqca_gradient(pulse, spect, target, cfg.rotation, cfg.seed, q); break;
      case Method::fd: g = fd_gradient(pulse, spect, target, cfg.basis, cfg.delta_u, cfg.seed, q, cfg.threads); break;
    }
    cumulative += per_iter;
    IterationRecord rec;
    rec.index = q;
    rec.experiments = per_iter;
    rec.cumulative_experiments = cumulative;
    rec.gradient_norm = g.norm();
    if (!g.finite() || !std::isfinite(rec.gradient_norm)) {
      rec.aborted = true;
      rec.warning = "non-finite gradient; run aborted";
      rec.pulse = pulse;
      rec.fidelity = std::numeric_limits<double>::quiet_NaN();
      rec.true_fidelity = std::numeric_limits<double>::quiet_NaN();
      history.push_back(rec);
      break;
    }
    rec.learning_rate = learning_rate_schedule(history.back().fidelity, c0);
    if (cfg.method == Method::fd) rec.delta_u = cfg.delta_u;
    pulse = update_pulse(pulse, g, rec.learning_rate);
    rec.pulse = pulse;
    rec.fidelity = record_fidelity(pulse, q);
    rec.true_fidelity = evaluator.true_quality(pulse, target);
    if (!std::isfinite(rec.fidelity)) {
      rec.aborted = true;
      rec.warning = "non-finite fidelity; run aborted";
      history.push_back(rec);
      break;
    }
    if (!closed && rec.fidelity < history.back().fidelity)
      rec.warning = "fidelity decreased by " + std::to_string(history.back().fidelity - rec.fidelity);
    history.push_back(rec);
    if (q >= cfg.stop_window) {
      const IterationRecord& past = history[history.size() - 1 - cfg.stop_window];
      const double gain = cfg.stop_on_true ? rec.true_fidelity - past.true_fidelity : rec.fidelity - past.fidelity;
      if (gain < cfg.stop_threshold) break;
    }
  }
  return history;
}

void write_history_jsonl(std::ostream& os, const std::vector<IterationRecord>& history, const std::string& run_id,
                         std::uint64_t seed, const std::string& config_hash) {
  for (const auto& r : history) {
    nlohmann::json j;
    if (!run_id.empty()) j["run"] = run_id;
    j["seed"] = seed;
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    j["iteration"] = r.index;
    j["fidelity"] = r.fidelity;
    j["true_fidelity"] = r.true_fidelity;
    j["gradient_norm"] = r.gradient_norm;
    j["learning_rate"] = r.learning_rate;
    if (r.delta_u > 0.0) j["delta_u"] = r.delta_u;
    j["experiments"] = r.experiments;
    j["cumulative_experiments"] = r.cumulative_experiments;
    j["dt_ns"] = r.pulse.dt;
    j["ux"] = r.pulse.ux;
    j["uy"] = r.pulse.uy;
    if (!r.warning.empty()) j["warning"] = r.warning;
    if (r.aborted) j["aborted"] = true;
    os << j.dump() << '\n';
  }
}

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history) {
  const auto old = os.precision();
  os << std::setprecision(12);
  os << "iteration,fidelity,true_fidelity,gradient_norm,learning_rate,cumulative_experiments\n";
  for (const auto& r : history)
    os << r.index << ',' << r.fidelity << ',' << r.true_fidelity << ',' << r.gradient_norm << ','
       << r.learning_rate << ',' << r.cumulative_experiments << '\n';
  os.precision(old);
}

}  // namespace spinqoc

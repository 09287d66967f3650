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

#include "spinqoc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace spinqoc {

namespace pt = boost::property_tree;

ConfigError::ConfigError(const std::string& file, int line, const std::string& field, const std::string& what)
    : std::runtime_error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                         (field.empty() ? std::string() : field + ": ") + what),
      line_(line),
      field_(field) {}

// ---------------------------------------------------------------------------
// Transfer and method specs
// ---------------------------------------------------------------------------

TransferFunction apply_delay(TransferFunction t, double delay_ns) {
  if (delay_ns == 0.0) return t;
  for (std::size_t i = 0; i < t.freq_grid.size(); ++i)
    t.response[i] *= std::polar(1.0, -kTwoPi * t.freq_grid[i] * delay_ns * 1e-3);
  return t;
}

TransferFunction build_transfer(const TransferSpec& spec) {
  TransferFunction t;
  if (spec.kind == "flat") t = TransferFunction::flat();
  else if (spec.kind == "measured_like") t = synthesize_transfer(spec.fwhm, TransferKind::measured_like);
  else if (spec.kind == "lorentzian") t = synthesize_transfer(spec.fwhm, TransferKind::lorentzian);
  else if (spec.kind == "csv") t = load_transfer_csv(spec.csv_path);
  else throw std::invalid_argument("unknown transfer kind '" + spec.kind + "'");
  return apply_delay(std::move(t), spec.delay_ns);
}

std::string MethodSpec::label() const {
  switch (method) {
    case Method::grape: return "grape";
    case Method::hqca: return "hqca";
    case Method::fd:
      switch (basis) {
        case BasisKind::linear_hadamard: return "fd-linear";
        case BasisKind::slepian: return "fd-slepian";
        case BasisKind::canonical: return "fd-canonical";
      }
  }
  return "?";
}

MethodSpec MethodSpec::parse(const std::string& s) {
  if (s == "grape") return {Method::grape, BasisKind::canonical};
  if (s == "hqca") return {Method::hqca, BasisKind::canonical};
  if (s == "fd-linear" || s == "fd") return {Method::fd, BasisKind::linear_hadamard};
  if (s == "fd-slepian") return {Method::fd, BasisKind::slepian};
  if (s == "fd-canonical") return {Method::fd, BasisKind::canonical};
  throw std::invalid_argument("unknown method '" + s + "' (hqca, grape, fd-linear, fd-slepian, fd-canonical)");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// INI parsing
// ---------------------------------------------------------------------------

namespace {

// Typed access to a parsed INI tree. Every key read is marked so leftovers
// can be reported as unknown.
class IniReader {
 public:
  IniReader(const std::string& text, std::string name) : name_(std::move(name)) {
    std::istringstream is(text);
    try {
      pt::read_ini(is, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(name_, static_cast<int>(e.line()), "", e.message());
    }
    index_lines(text);
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto s = tree_.get_child_optional(sec);
    return s && s->find(key) != s->not_found();
  }

  std::string str(const std::string& sec, const std::string& key, const std::string& def) {
    if (!has(sec, key)) return def;
    used_.insert(sec + "." + key);
    return boost::trim_copy(tree_.get_child(sec).find(key)->second.data());
  }

  double num(const std::string& sec, const std::string& key, double def) {
    if (!has(sec, key)) return def;
    const std::string v = str(sec, key, "");
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      fail(sec, key, "expected a number, got '" + v + "'");
    }
  }

  int integer(const std::string& sec, const std::string& key, int def) {
    const double d = num(sec, key, def);
    if (d != std::floor(d) || std::abs(d) > 1e9) fail(sec, key, "expected an integer");
    return static_cast<int>(d);
  }

  bool boolean(const std::string& sec, const std::string& key, bool def) {
    if (!has(sec, key)) return def;
    const std::string v = boost::to_lower_copy(str(sec, key, ""));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(sec, key, "expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& sec, const std::string& key) {
    std::vector<std::string> out;
    if (!has(sec, key)) return out;
    std::string v = str(sec, key, "");
    boost::split(out, v, boost::is_any_of(","));
    for (auto& s : out) boost::trim(s);
    out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
    if (out.empty()) fail(sec, key, "empty list");
    return out;
  }

  bool section(const std::string& sec) const { return static_cast<bool>(tree_.get_child_optional(sec)); }

  [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& what) const {
    throw ConfigError(name_, line_of(sec, key), sec + "." + key, what);
  }

  // Rejects sections and keys nobody asked for.
  void check_unused(const std::set<std::string>& known_sections) const {
    for (const auto& [sec, child] : tree_) {
      if (!known_sections.count(sec)) throw ConfigError(name_, line_of(sec, ""), sec, "unknown section");
      for (const auto& [key, value] : child) {
        if (!used_.count(sec + "." + key)) throw ConfigError(name_, line_of(sec, key), sec + "." + key, "unknown key");
      }
    }
  }

 private:
  void index_lines(const std::string& text) {
    std::istringstream is(text);
    std::string line, sec;
    int n = 0;
    while (std::getline(is, line)) {
      ++n;
      boost::trim(line);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']') {
        sec = boost::trim_copy(line.substr(1, line.size() - 2));
        lines_.emplace(sec + ".", n);
        continue;
      }
      const auto eq = line.find('=');
      if (eq != std::string::npos) lines_.emplace(sec + "." + boost::trim_copy(line.substr(0, eq)), n);
    }
  }

  int line_of(const std::string& sec, const std::string& key) const {
    auto it = lines_.find(sec + "." + key);
    return it == lines_.end() ? 0 : it->second;
  }

  std::string name_;
  pt::ptree tree_;
  std::map<std::string, int> lines_;
  std::set<std::string> used_;
};

SpinSystem read_system(IniReader& r, const std::string& sec, const SpinSystem& def) {
  SpinSystem s = def;
  s.a = r.num(sec, "a", s.a);
  s.b = r.num(sec, "b", s.b);
  s.omega_i = r.num(sec, "omega_i", s.omega_i);
  s.detuning = r.num(sec, "detuning", s.detuning);
  if (r.has(sec, "a2") || r.has(sec, "b2")) {
    ExtraProton p;
    p.a2 = r.num(sec, "a2", 0.0);
    p.b2 = r.num(sec, "b2", 0.0);
    s.extra_proton = p;
  }
  return s;
}

TransferSpec read_transfer(IniReader& r, const std::string& sec, const std::string& dir) {
  TransferSpec t;
  t.kind = r.str(sec, "kind", t.kind);
  if (t.kind != "flat" && t.kind != "measured_like" && t.kind != "lorentzian" && t.kind != "csv")
    r.fail(sec, "kind", "expected flat, measured_like, lorentzian or csv");
  t.fwhm = r.num(sec, "fwhm", t.fwhm);
  if (!(t.fwhm > 0.0)) r.fail(sec, "fwhm", "must be positive");
  t.delay_ns = r.num(sec, "delay_ns", t.delay_ns);
  t.csv_path = r.str(sec, "csv", "");
  if (t.kind == "csv") {
    if (t.csv_path.empty()) r.fail(sec, "csv", "required when kind = csv");
    std::filesystem::path p(t.csv_path);
    if (p.is_relative() && !dir.empty()) p = std::filesystem::path(dir) / p;
    if (!std::filesystem::exists(p)) r.fail(sec, "csv", "file not found: " + p.string());
    t.csv_path = p.string();
  }
  return t;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
  IniReader r(text, name);
  ExperimentConfig c;
  c.source_path = name;
  c.config_hash = fnv1a_hex(text);
  const std::string dir =
      name.empty() || name[0] == '<' ? std::string() : std::filesystem::path(name).parent_path().string();

  c.truth = read_system(r, "system", SpinSystem{});
  c.model = r.section("model") ? read_system(r, "model", c.truth) : c.truth;
  if (c.model.qubits() != c.truth.qubits())
    throw ConfigError(name, 0, "model", "model and system must have the same number of spins");

  c.use_ensemble = r.boolean("ensemble", "enabled", true);
  c.ensemble.fwhm = r.num("ensemble", "fwhm", c.ensemble.fwhm);
  c.ensemble.n_points = r.integer("ensemble", "points", c.ensemble.n_points);
  c.ensemble.span = r.num("ensemble", "span", c.ensemble.span);
  if (c.ensemble.n_points < 1 || c.ensemble.n_points % 2 == 0) r.fail("ensemble", "points", "must be odd and >= 1");

  c.transfer = read_transfer(r, "transfer", dir);
  c.design_transfer = read_transfer(r, "design_transfer", dir);

  c.segments = r.integer("pulse", "segments", c.segments);
  if (c.segments < 1) r.fail("pulse", "segments", "must be >= 1");
  c.dt_ns = r.num("pulse", "dt_ns", c.dt_ns);
  if (!(c.dt_ns > 0.0)) r.fail("pulse", "dt_ns", "must be positive");
  c.initial.kind = r.str("pulse", "initial", c.initial.kind);
  if (c.initial.kind != "square" && c.initial.kind != "tone" && c.initial.kind != "file")
    r.fail("pulse", "initial", "expected square, tone or file");
  c.initial.amplitude = r.num("pulse", "amplitude", c.initial.amplitude);
  c.initial.frequency = r.num("pulse", "frequency", c.initial.frequency);
  c.initial.path = r.str("pulse", "file", "");
  if (c.initial.kind == "file") {
    if (c.initial.path.empty()) r.fail("pulse", "file", "required when initial = file");
    std::filesystem::path p(c.initial.path);
    if (p.is_relative() && !dir.empty()) p = std::filesystem::path(dir) / p;
    if (!std::filesystem::exists(p)) r.fail("pulse", "file", "file not found: " + p.string());
    c.initial.path = p.string();
  }

  const std::string gate = r.str("target", "gate", "gate2");
  try {
    const GateKind g = parse_gate(gate);
    if (g == GateKind::gate1) c.target = Target::gate1();
    else if (g == GateKind::gate2) c.target = Target::gate2();
    else c.target = Target::state(r.str("target", "initial", "ZI"), r.str("target", "final", "ZZ"));
  } catch (const std::invalid_argument& e) {
    r.fail("target", "gate", e.what());
  }
  if (c.target.kind == GateKind::state) {
    for (const auto& [key, label] : {std::pair{"initial", c.target.initial}, std::pair{"final", c.target.final_state}}) {
      try {
        if (static_cast<int>(label.size()) > c.truth.qubits()) throw std::invalid_argument("too many factors");
        (void)pauli_state(label);
      } catch (const std::exception& e) {
        r.fail("target", key, std::string("bad Pauli label '") + label + "': " + e.what());
      }
    }
  }

  OptimizerConfig& o = c.optimizer;
  try {
    c.method = MethodSpec::parse(r.str("optimizer", "method", "hqca"));
  } catch (const std::invalid_argument& e) {
    r.fail("optimizer", "method", e.what());
  }
  o.method = c.method.method;
  o.c0 = r.num("optimizer", "c0", o.c0);
  const std::string cal = r.str("optimizer", "calibration", "gain");
  if (cal == "step") o.calibration = OptimizerConfig::Calibration::step;
  else if (cal == "gain") o.calibration = OptimizerConfig::Calibration::gain;
  else r.fail("optimizer", "calibration", "expected step or gain");
  o.first_step = r.num("optimizer", "first_step", o.first_step);
  o.first_gain = r.num("optimizer", "first_gain", o.first_gain);
  o.delta_u = r.num("optimizer", "delta_u", o.delta_u);
  o.delta_sigmas = r.num("optimizer", "delta_sigmas", o.delta_sigmas);
  o.delta_max = r.num("optimizer", "delta_max", o.delta_max);
  o.max_iters = r.integer("optimizer", "max_iters", o.max_iters);
  o.stop_window = r.integer("optimizer", "stop_window", o.stop_window);
  o.stop_threshold = r.num("optimizer", "stop_threshold", o.stop_threshold);
  o.repeats = r.integer("optimizer", "repeats", o.repeats);
  const std::string stop_on = r.str("optimizer", "stop_on", "true");
  if (stop_on == "true") o.stop_on_true = true;
  else if (stop_on == "measured") o.stop_on_true = false;
  else r.fail("optimizer", "stop_on", "expected true or measured");
  c.slepian_w = r.num("optimizer", "slepian_w", c.slepian_w);
  c.slepian_count = r.integer("optimizer", "slepian_count", c.slepian_count);
  const std::string rot = r.str("optimizer", "rotation", "ideal");
  if (rot == "ideal") o.rotation.kind = RotationKind::ideal;
  else if (rot == "two_tone") o.rotation.kind = RotationKind::two_tone;
  else r.fail("optimizer", "rotation", "expected ideal or two_tone");
  o.rotation.theta = r.num("optimizer", "theta", o.rotation.theta);
  o.rotation.tone_duration = r.num("optimizer", "tone_duration_ns", o.rotation.tone_duration);
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name, 0, "optimizer", e.what());
  }

  c.noise.sigma = r.num("noise", "sigma", c.noise.sigma);
  if (c.noise.sigma < 0.0) r.fail("noise", "sigma", "must be >= 0");
  c.noise.averages = r.integer("noise", "averages", c.noise.averages);

  c.trials = r.integer("run", "trials", c.trials);
  if (c.trials < 1) r.fail("run", "trials", "must be >= 1");
  const double seed = r.num("run", "seed", static_cast<double>(c.seed));
  if (seed < 0 || seed != std::floor(seed)) r.fail("run", "seed", "must be a non-negative integer");
  c.seed = static_cast<std::uint64_t>(seed);
  c.threads = r.integer("run", "threads", c.threads);
  if (c.threads < 1) r.fail("run", "threads", "must be >= 1");
  c.output_dir = r.str("run", "output_dir", c.output_dir);

  if (r.section("sweep")) {
    c.sweep_variable = r.str("sweep", "variable", "");
    if (c.sweep_variable != "sigma" && c.sweep_variable != "transfer_fwhm" && c.sweep_variable != "method" &&
        c.sweep_variable != "basis")
      r.fail("sweep", "variable", "expected sigma, transfer_fwhm, method or basis");
    c.sweep_values = r.list("sweep", "values");
    if (c.sweep_values.empty()) r.fail("sweep", "values", "sweep needs at least one value");
    c.sweep_methods = r.list("sweep", "methods");
    for (const auto& v : c.sweep_values) {
      try {
        ExperimentConfig probe = c;
        apply_sweep_value(probe, c.sweep_variable, v);
      } catch (const std::invalid_argument& e) {
        r.fail("sweep", "values", e.what());
      }
    }
    for (const auto& m : c.sweep_methods) {
      try {
        (void)MethodSpec::parse(m);
      } catch (const std::invalid_argument& e) {
        r.fail("sweep", "methods", e.what());
      }
    }
  }

  r.check_unused({"system", "model", "ensemble", "transfer", "design_transfer", "pulse", "target", "optimizer",
                  "noise", "run", "sweep"});
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path, 0, "", "cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& variable, const std::string& value) {
  auto number = [&] {
    std::size_t pos = 0;
    double d = 0.0;
    try {
      d = std::stod(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw std::invalid_argument("'" + value + "' is not a number");
    return d;
  };
  if (variable == "sigma") {
    const double s = number();
    if (s < 0.0) throw std::invalid_argument("sigma must be >= 0");
    cfg.noise.sigma = s;
  } else if (variable == "transfer_fwhm") {
    const double f = number();
    if (!(f > 0.0)) throw std::invalid_argument("transfer_fwhm must be positive");
    cfg.transfer.fwhm = f;
    if (cfg.transfer.kind == "flat") cfg.transfer.kind = "measured_like";
  } else if (variable == "method") {
    cfg.method = MethodSpec::parse(value);
    cfg.optimizer.method = cfg.method.method;
  } else if (variable == "basis") {
    if (value == "linear") cfg.method.basis = BasisKind::linear_hadamard;
    else if (value == "slepian") cfg.method.basis = BasisKind::slepian;
    else if (value == "canonical") cfg.method.basis = BasisKind::canonical;
    else throw std::invalid_argument("basis must be linear, slepian or canonical");
    cfg.method.method = Method::fd;
    cfg.optimizer.method = Method::fd;
  } else {
    throw std::invalid_argument("unknown sweep variable '" + variable + "'");
  }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

Ensemble build_ensemble(const ExperimentConfig& cfg, const SpinSystem& sys) {
  return cfg.use_ensemble ? lorentzian_ensemble(cfg.ensemble, sys) : single_member(sys);
}

namespace {

VirtualSpectrometer make_spectrometer(const ExperimentConfig& cfg, const SpinSystem& sys, const TransferSpec& ts,
                                      MeasurementModel noise) {
  const TransferFunction t = build_transfer(ts);
  DistortionOperator k = t.is_flat() ? DistortionOperator::identity(cfg.segments, cfg.dt_ns)
                                     : DistortionOperator(t, cfg.segments, cfg.dt_ns);
  return VirtualSpectrometer(build_ensemble(cfg, sys), std::move(k), noise, t);
}

}  // namespace

VirtualSpectrometer build_truth(const ExperimentConfig& cfg, std::uint64_t noise_seed) {
  MeasurementModel n = cfg.noise;
  n.seed = noise_seed;
  return make_spectrometer(cfg, cfg.truth, cfg.transfer, n);
}

VirtualSpectrometer build_model(const ExperimentConfig& cfg) {
  return make_spectrometer(cfg, cfg.model, cfg.design_transfer, MeasurementModel{});
}

ControlPulse build_initial_pulse(const ExperimentConfig& cfg) {
  const InitialPulseSpec& s = cfg.initial;
  ControlPulse p;
  if (s.kind == "square") p = ControlPulse::square(cfg.segments, cfg.dt_ns, s.amplitude, 0.0);
  else if (s.kind == "tone") p = ControlPulse::tone(cfg.segments, cfg.dt_ns, s.frequency, s.amplitude);
  else {
    p = load_pulse(s.path);
    if (p.segments() != cfg.segments || std::abs(p.dt - cfg.dt_ns) > 1e-12)
      throw std::invalid_argument("initial pulse file " + s.path + " does not match segments/dt_ns");
  }
  return p;
}

OptimizerConfig build_optimizer(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  OptimizerConfig o = cfg.optimizer;
  o.method = cfg.method.method;
  o.seed = trial_seed;
  o.threads = 1;
  if (o.method == Method::fd) {
    switch (cfg.method.basis) {
      case BasisKind::linear_hadamard: o.basis = make_linear_basis(cfg.segments); break;
      case BasisKind::slepian:
        o.basis = cfg.slepian_count > 0 ? make_slepian_basis(cfg.segments, cfg.slepian_w, cfg.slepian_count)
                                        : make_slepian_basis(cfg.segments, cfg.slepian_w);
        break;
      case BasisKind::canonical: o.basis = make_canonical_basis(cfg.segments); break;
    }
  }
  return o;
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x7472u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ---------------------------------------------------------------------------
// Campaigns
// ---------------------------------------------------------------------------

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  TrialResult res;
  res.trial = trial;
  res.seed = child_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  const VirtualSpectrometer truth = build_truth(cfg, res.seed);
  const OptimizerConfig o = build_optimizer(cfg, res.seed);
  const ControlPulse p0 = build_initial_pulse(cfg);
  if (o.method == Method::grape) {
    const VirtualSpectrometer model = build_model(cfg);
    res.history = run_optimization(o, model, cfg.target, p0, &truth);
  } else {
    res.history = run_optimization(o, truth, cfg.target, p0);
  }
  // An aborted last record carries NaN; report the last finite pulse instead.
  auto it = std::find_if(res.history.rbegin(), res.history.rend(),
                         [](const IterationRecord& r) { return std::isfinite(r.true_fidelity); });
  res.final_fidelity = it->true_fidelity;
  res.final_recorded = it->fidelity;
  return res;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

CampaignResult run_campaign(const ExperimentConfig& cfg) {
  CampaignResult c;
  c.label = cfg.method.label();
  c.config_hash = cfg.config_hash;
  c.trials.resize(static_cast<std::size_t>(cfg.trials));
  const auto t0 = std::chrono::steady_clock::now();

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (int i = next++; i < cfg.trials; i = next++) {
      try {
        c.trials[static_cast<std::size_t>(i)] = run_trial(cfg, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::min(cfg.threads, cfg.trials);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (const auto& t : c.trials) c.finals.push_back(t.final_fidelity);
  std::tie(c.mean, c.stddev) = mean_std(c.finals);
  c.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

void write_campaign_jsonl(std::ostream& os, const CampaignResult& c, const ExperimentConfig& cfg) {
  for (const auto& t : c.trials)
    write_history_jsonl(os, t.history, c.label + "/" + std::to_string(t.trial), t.seed, cfg.config_hash);
}

void write_campaign_csv(std::ostream& os, const CampaignResult& c, const ExperimentConfig&) {
  const auto old = os.precision();
  os << std::setprecision(12);
  os << "trial,iteration,fidelity,true_fidelity,gradient_norm,learning_rate,cumulative_experiments\n";
  for (const auto& t : c.trials)
    for (const auto& r : t.history)
      os << t.trial << ',' << r.index << ',' << r.fidelity << ',' << r.true_fidelity << ',' << r.gradient_norm
         << ',' << r.learning_rate << ',' << r.cumulative_experiments << '\n';
  os.precision(old);
}

std::string convergence_svg(const CampaignResult& c, const std::string& title) {
  std::size_t len = 0;
  for (const auto& t : c.trials) len = std::max(len, t.history.size());
  std::vector<double> mean(len), sd(len);
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> v;
    for (const auto& t : c.trials) {
      if (t.history.empty()) continue;
      // Finished trials hold their last value.
      const auto& r = t.history[std::min(i, t.history.size() - 1)];
      if (std::isfinite(r.true_fidelity)) v.push_back(r.true_fidelity);
    }
    std::tie(mean[i], sd[i]) = mean_std(v);
  }
  const double w = 640, h = 400, l = 60, r = 20, top = 40, b = 50;
  double ymin = 1.0;
  for (std::size_t i = 0; i < len; ++i) ymin = std::min(ymin, mean[i] - sd[i]);
  ymin = std::floor(std::max(-1.0, ymin) * 10.0) / 10.0;
  const double ymax = 1.0;
  const double xmax = std::max<double>(1.0, static_cast<double>(len) - 1.0);
  auto X = [&](double i) { return l + (w - l - r) * i / xmax; };
  auto Y = [&](double f) { return top + (h - top - b) * (ymax - f) / (ymax - ymin); };

  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << l << "\" y1=\"" << h - b << "\" x2=\"" << w - r << "\" y2=\"" << h - b
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << l << "\" y1=\"" << top << "\" x2=\"" << l << "\" y2=\"" << h - b << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double f = ymin + (ymax - ymin) * k / 4.0;
    s << "<text x=\"" << l - 6 << "\" y=\"" << Y(f) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << std::setprecision(3) << f << std::setprecision(2) << "</text>\n";
  }
  s << "<text x=\"" << l << "\" y=\"" << h - b + 18 << "\" font-size=\"11\">0</text>\n";
  s << "<text x=\"" << w - r << "\" y=\"" << h - b + 18 << "\" text-anchor=\"end\" font-size=\"11\">"
    << static_cast<int>(xmax) << "</text>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">iteration</text>\n";
  for (std::size_t i = 0; i < len; ++i) {
    if (sd[i] <= 0.0) continue;
    s << "<line x1=\"" << X(i) << "\" y1=\"" << Y(mean[i] - sd[i]) << "\" x2=\"" << X(i) << "\" y2=\""
      << Y(mean[i] + sd[i]) << "\" stroke=\"#99b\"/>\n";
  }
  s << "<polyline fill=\"none\" stroke=\"#224\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < len; ++i) s << X(i) << ',' << Y(mean[i]) << ' ';
  s << "\"/>\n</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

SweepTable run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_variable.empty()) throw std::invalid_argument("config has no [sweep] section");
  if (cfg.sweep_values.empty()) throw std::invalid_argument("sweep has no values");
  SweepTable t;
  t.variable = cfg.sweep_variable;
  t.rows = cfg.sweep_values;
  if (cfg.sweep_methods.empty()) t.columns = {cfg.method.label()};
  else t.columns = cfg.sweep_methods;
  for (const auto& v : t.rows) {
    std::vector<CampaignResult> row;
    for (const auto& m : t.columns) {
      ExperimentConfig c = cfg;
      apply_sweep_value(c, "method", m);
      apply_sweep_value(c, t.variable, v);
      row.push_back(run_campaign(c));
      row.back().label = c.method.label();
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

void write_sweep_csv(std::ostream& os, const SweepTable& t, const ExperimentConfig& cfg) {
  const auto old = os.precision();
  os << std::setprecision(12);
  os << t.variable << ",method,trials,mean,std,runtime_s,config_hash\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const auto& c = t.cells[i][j];
      os << t.rows[i] << ',' << c.label << ',' << c.finals.size() << ',' << c.mean << ',' << c.stddev << ','
         << c.runtime_s << ',' << cfg.config_hash << '\n';
    }
  os.precision(old);
}

std::string format_sweep_table(const SweepTable& t) {
  std::ostringstream s;
  s << std::left << std::setw(16) << t.variable;
  for (const auto& c : t.columns) s << std::setw(16) << c;
  s << '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s << std::setw(16) << t.rows[i];
    for (const auto& c : t.cells[i]) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3) << c.mean << '(' << std::lround(c.stddev * 1000.0) << ')';
      s << std::setw(16) << cell.str();
    }
    s << '\n';
  }
  return s.str();
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

std::string spectrum_report(const SpinSystem& sys) {
  const Eigenstructure es = diagonalize(sys);
  const int n = sys.dim();
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  s << "A = " << sys.a << " MHz, B = " << sys.b << " MHz, omega_I = " << sys.omega_i << " MHz";
  if (sys.extra_proton) s << ", A2 = " << sys.extra_proton->a2 << " MHz, B2 = " << sys.extra_proton->b2 << " MHz";
  s << "\n";
  s << "|omega12| = " << std::abs(es.omega12) << " MHz, |omega34| = " << std::abs(es.omega34) << " MHz\n";
  if (es.degenerate) s << "warning: degenerate levels, ordering fell back to index order\n";
  s << "levels (MHz):";
  for (double e : es.diagonal_h0) s << ' ' << e / kTwoPi;
  s << "\nelectron lines (MHz, offset from carrier):\n";
  const int half = n / 2;
  const CMat sx = es.eigenbasis.adjoint() * pauli_on('X', 0, sys.qubits()) * es.eigenbasis;
  for (int i = 0; i < half; ++i)
    for (int j = half; j < n; ++j) {
      const double amp = std::norm(sx(i, j));
      if (amp < 1e-6) continue;
      s << "  " << i + 1 << " <-> " << j + 1 << "  " << std::setw(10) << (es.diagonal_h0[i] - es.diagonal_h0[j]) / kTwoPi
        << "  rel. intensity " << amp << '\n';
    }
  return s.str();
}

GradcheckReport run_gradcheck(const ExperimentConfig& cfg, int pulses) {
  GradcheckReport rep;
  const VirtualSpectrometer spect = build_truth(cfg, child_seed(cfg.seed, 0));
  const VirtualSpectrometer quiet = spect.noiseless();
  const ControlPulse base = build_initial_pulse(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> jitter(0.0, 5.0);
  const BasisSet canonical = make_canonical_basis(cfg.segments);
  RotationModel rot = cfg.optimizer.rotation;

  double worst_hqca = 1.0, worst_chain = 0.0, worst_sin = 0.0, worst_noisy = 1.0, sin_ratio = 0.0;
  for (int k = 0; k < pulses; ++k) {
    ControlPulse p = base;
    for (int m = 0; m < p.segments(); ++m) {
      p.ux[m] += jitter(rng);
      p.uy[m] += jitter(rng);
    }
    const GradientVector exact = quiet.exact_gradient(p, cfg.target);
    const GradientVector hq = hqca_gradient(p, quiet, cfg.target, rot);
    worst_hqca = std::min(worst_hqca, direction_cosine(hq, exact));

    // The sin law is exact only for instantaneous rotations.
    RotationModel half;
    RotationModel quarter;
    quarter.theta = half.theta / 2.0;
    const GradientVector gh = hqca_gradient(p, quiet, cfg.target, half);
    GradientVector hq2 = hqca_gradient(p, quiet, cfg.target, quarter);
    if (k == 0) sin_ratio = hq2.dot(gh) / std::max(gh.dot(gh), 1e-300);
    hq2 *= 1.0 / std::sin(quarter.theta);
    GradientVector diff = hq2;
    diff *= -1.0;
    diff += gh;
    worst_sin = std::max(worst_sin, diff.norm() / std::max(gh.norm(), 1e-300));

    if (k == 0) {
      const GradientVector fd = fd_gradient(p, quiet, cfg.target, canonical, 1e-4);
      GradientVector d = fd;
      d *= -1.0;
      d += exact;
      worst_chain = d.norm() / std::max(exact.norm(), 1e-300);
    }
    if (cfg.noise.sigma > 0.0)
      worst_noisy = std::min(worst_noisy,
                             direction_cosine(hqca_gradient(p, spect, cfg.target, rot, cfg.seed, k + 1), exact));
  }
  auto line = [&](const std::string& name, double v, bool ok, bool gate = true) {
    std::ostringstream s;
    s << std::left << std::setw(44) << name << std::setprecision(8) << v << (gate ? (ok ? "  ok" : "  FAIL") : "  info");
    rep.lines.push_back(s.str());
    if (gate && !ok) rep.passed = false;
  };
  line("hqca/exact direction cosine (min)", worst_hqca, worst_hqca >= 0.99);
  line("sin(theta) law relative deviation (max)", worst_sin, worst_sin <= 1e-8);
  line("theta=pi/4 to pi/2 gradient ratio", sin_ratio, std::abs(sin_ratio - std::sin(std::numbers::pi / 4.0)) <= 1e-6);
  line("fd-canonical/chain-rule relative error", worst_chain, worst_chain <= 1e-6);
  if (cfg.noise.sigma > 0.0) line("noisy hqca/exact direction cosine (min)", worst_noisy, true, false);
  return rep;
}

}  // namespace spinqoc

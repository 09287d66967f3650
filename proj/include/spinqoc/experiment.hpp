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

// Experiment configs, trial campaigns and their on-disk artifacts.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinqoc/optimizers.hpp"
#include "spinqoc/spectrometer.hpp"
#include "spinqoc/spin_model.hpp"

namespace spinqoc {

/// Config problem tied to a file position.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& field, const std::string& what);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct TransferSpec {
  std::string kind = "flat";  // flat | measured_like | lorentzian | csv
  double fwhm = 130.0;
  double delay_ns = 0.0;
  std::string csv_path;
};

/// Multiplies the response by exp(-i 2 pi f delay).
TransferFunction apply_delay(TransferFunction t, double delay_ns);
TransferFunction build_transfer(const TransferSpec& spec);

struct InitialPulseSpec {
  std::string kind = "square";  // square | tone | file
  double amplitude = 20.0;      // rad/us
  double frequency = -36.0;     // MHz, tone only
  std::string path;
};

/// Method label as used in configs and tables: hqca, grape, fd-linear,
/// fd-slepian, fd-canonical.
struct MethodSpec {
  Method method = Method::hqca;
  BasisKind basis = BasisKind::linear_hadamard;
  std::string label() const;
  static MethodSpec parse(const std::string& s);
};

struct ExperimentConfig {
  std::string source_path;
  std::string config_hash;

  SpinSystem truth;
  SpinSystem model;  // open loop; defaults to truth
  bool use_ensemble = true;
  EnsembleSpec ensemble;
  TransferSpec transfer;
  TransferSpec design_transfer;  // open loop design condition
  int segments = 100;
  double dt_ns = 2.0;
  InitialPulseSpec initial;
  Target target = Target::gate2();
  MethodSpec method;
  OptimizerConfig optimizer;
  double slepian_w = 0.12;
  int slepian_count = 0;  // 0: round(2 N W)
  MeasurementModel noise;
  int trials = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";

  // [sweep]
  std::string sweep_variable;
  std::vector<std::string> sweep_values;
  std::vector<std::string> sweep_methods;
};

/// FNV-1a 64-bit hash of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Parses an INI config. Unknown sections or keys, unparsable values and
/// missing referenced files raise ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& name = "<config>");

/// Applies one sweep assignment (variable in sigma, transfer_fwhm, method, basis).
void apply_sweep_value(ExperimentConfig& cfg, const std::string& variable, const std::string& value);

Ensemble build_ensemble(const ExperimentConfig& cfg, const SpinSystem& sys);
VirtualSpectrometer build_truth(const ExperimentConfig& cfg, std::uint64_t noise_seed);
VirtualSpectrometer build_model(const ExperimentConfig& cfg);
ControlPulse build_initial_pulse(const ExperimentConfig& cfg);
/// Optimizer config with the basis and seed filled in.
OptimizerConfig build_optimizer(const ExperimentConfig& cfg, std::uint64_t trial_seed);

/// Deterministic per-trial seed.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t trial);

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> history;
  double final_fidelity = 0.0;       // true fidelity of the last pulse
  double final_recorded = 0.0;       // recorded (noisy mean or model) value
};

TrialResult run_trial(const ExperimentConfig& cfg, int trial);

struct CampaignResult {
  std::string label;
  std::vector<TrialResult> trials;
  std::vector<double> finals;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
  double runtime_s = 0.0;
  std::string config_hash;
};

/// Runs cfg.trials trials on up to cfg.threads threads.
CampaignResult run_campaign(const ExperimentConfig& cfg);

/// mean and sample standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v);

void write_campaign_jsonl(std::ostream& os, const CampaignResult& c, const ExperimentConfig& cfg);
/// trial,iteration,fidelity,true_fidelity,gradient_norm,learning_rate,cumulative_experiments
void write_campaign_csv(std::ostream& os, const CampaignResult& c, const ExperimentConfig& cfg);
/// Mean true fidelity vs iteration with one-sigma bars across trials.
std::string convergence_svg(const CampaignResult& c, const std::string& title);

struct SweepTable {
  std::string variable;
  std::vector<std::string> rows;     // sweep values
  std::vector<std::string> columns;  // method labels
  std::vector<std::vector<CampaignResult>> cells;  // [row][column]
};

SweepTable run_sweep(const ExperimentConfig& cfg);
void write_sweep_csv(std::ostream& os, const SweepTable& t, const ExperimentConfig& cfg);
/// Fixed-width text table "mean(std)" in the last two digits.
std::string format_sweep_table(const SweepTable& t);

/// Stick-spectrum lines for the configured system.
std::string spectrum_report(const SpinSystem& sys);

struct GradcheckReport {
  std::vector<std::string> lines;
  bool passed = true;
};

/// Estimator consistency, sin(theta) law and chain rule on the configured
/// system. The consistency check is informational when sigma > 0.
GradcheckReport run_gradcheck(const ExperimentConfig& cfg, int pulses = 10);

}  // namespace spinqoc

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

// Gradient estimators and the shared ascent loop.
//
//  - grape: analytic gradient of a model spectrometer (no experiments).
//  - hqca:  rotation-insertion differences measured on the spectrometer.
//  - fd:    central differences along basis vectors, x channel then y.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spinqoc/pulse.hpp"
#include "spinqoc/spectrometer.hpp"

namespace spinqoc {

enum class Method { grape, hqca, fd };

std::string method_name(Method m);
Method parse_method(const std::string& s);

struct OptimizerConfig {
  Method method = Method::hqca;
  BasisSet basis;           // fd only; empty means canonical
  RotationModel rotation;   // hqca only
  double c0 = 0.0;          // base learning rate; <= 0 selects auto calibration
  enum class Calibration { gain, step };
  Calibration calibration = Calibration::gain;
  double first_gain = 0.02; // gain: c0 ||g||^2 of the noiseless first gradient
  double first_step = 18.0; // step: c0 ||g|| of the noiseless first gradient (rad/us)
  double delta_u = 0.0;     // fd difference value (rad/us); <= 0 selects auto
  double delta_sigmas = 5.0;// auto delta_u: delta ||g_0|| = delta_sigmas * sigma
  double delta_max = 100.0; // auto delta_u never exceeds this (rad/us)
  int max_iters = 100;
  int stop_window = 5;
  double stop_threshold = 0.01;
  int repeats = 5;          // noisy measurements averaged per recorded fidelity
  bool stop_on_true = true; // stop rule reads true_fidelity instead of the noisy record
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct IterationRecord {
  int index = 0;
  double fidelity = 0.0;       // recorded (closed loop: mean of noisy repeats)
  double true_fidelity = 0.0;  // noiseless value on the evaluation spectrometer
  double gradient_norm = 0.0;
  double learning_rate = 0.0;
  double delta_u = 0.0;        // fd difference value in use; 0 for other methods
  long long experiments = 0;   // charged this iteration
  long long cumulative_experiments = 0;
  ControlPulse pulse;
  std::string warning;         // empty unless something noteworthy happened
  bool aborted = false;
};

/// c0, c0/2, c0/4, c0/8 for F below 0.95, 0.97, 0.98 and above.
double learning_rate_schedule(double fidelity, double c0);

/// Measured rotation-insertion gradient. Component k of iteration q draws its
/// noise from NoiseStream(seed, q, k).
GradientVector hqca_gradient(const ControlPulse& p, const VirtualSpectrometer& spect, const Target& target,
                             const RotationModel& rotation, std::uint64_t seed = 0, std::uint64_t iteration = 0);

/// Central-difference gradient along every basis vector on each channel.
GradientVector fd_gradient(const ControlPulse& p, const VirtualSpectrometer& spect, const Target& target,
                           const BasisSet& basis, double delta_u, std::uint64_t seed = 0,
                           std::uint64_t iteration = 0, int threads = 1);

/// Analytic gradient on a model spectrometer (model spins, design transfer).
GradientVector grape_gradient(const ControlPulse& p, const VirtualSpectrometer& model, const Target& target);

/// Experiments a closed-loop gradient costs: 2 per (axis, segment, sign) for
/// hqca; 2 per (channel, basis vector) for fd; 0 for grape. Times P.
long long experiments_per_gradient(const OptimizerConfig& cfg, int segments, const Target& target);

/// Learning rate from the method's noiseless gradient g at `initial`:
/// first_gain / ||g||^2 (predicted first-order fidelity gain) or
/// first_step / ||g|| (update norm).
double calibrate_learning_rate(const OptimizerConfig& cfg, const VirtualSpectrometer& spect, const Target& target,
                               const ControlPulse& initial);

/// FD difference value: cfg.delta_u when positive, otherwise
/// min(delta_sigmas * sigma / ||g_0||, delta_max) with g_0 the noiseless
/// gradient at `initial` (1 rad/us when sigma = 0).
double resolve_delta(const OptimizerConfig& cfg, const VirtualSpectrometer& spect, const Target& target,
                     const ControlPulse& initial);

/// Runs the ascent. For grape `spect` is the model and `truth` (optional)
/// supplies true_fidelity; for closed-loop methods `spect` is the hardware and
/// `truth` is ignored.
std::vector<IterationRecord> run_optimization(const OptimizerConfig& cfg, const VirtualSpectrometer& spect,
                                              const Target& target, const ControlPulse& initial,
                                              const VirtualSpectrometer* truth = nullptr);

/// One JSON object per line.
void write_history_jsonl(std::ostream& os, const std::vector<IterationRecord>& history,
                         const std::string& run_id = "", std::uint64_t seed = 0,
                         const std::string& config_hash = "");
/// iteration,fidelity,true_fidelity,gradient_norm,learning_rate,cumulative_experiments
void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history);

}  // namespace spinqoc

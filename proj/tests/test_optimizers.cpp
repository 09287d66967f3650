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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spinqoc/optimizers.hpp"
#include "spinqoc/propagator.hpp"

namespace spinqoc {
namespace {

ControlPulse random_pulse(int m, std::mt19937_64& rng, double amp = 20.0) {
  std::uniform_real_distribution<double> d(-amp, amp);
  ControlPulse p = ControlPulse::zeros(m, 2.0);
  for (int i = 0; i < m; ++i) {
    p.ux[i] = d(rng);
    p.uy[i] = d(rng);
  }
  return p;
}

SpinSystem reference_system() {
  SpinSystem s;
  s.a = 66.0;
  s.b = 26.0;
  return s;
}

SpinSystem no_h0() {
  SpinSystem s;
  s.a = 0.0;
  s.omega_i = 0.0;
  return s;
}

VirtualSpectrometer flat(const Ensemble& e, int m = 100, double sigma = 0.0, std::uint64_t seed = 1) {
  return VirtualSpectrometer(e, DistortionOperator::identity(m, 2.0), MeasurementModel{sigma, seed, 16000});
}

double relative_error(const GradientVector& a, const GradientVector& ref) {
  double e = 0.0;
  for (int i = 0; i < a.segments(); ++i) e += std::pow(a.gx[i] - ref.gx[i], 2) + std::pow(a.gy[i] - ref.gy[i], 2);
  return std::sqrt(e) / ref.norm();
}

TEST(Schedule, Thresholds) {
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.90, 8.0), 8.0);
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.96, 8.0), 4.0);
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.975, 8.0), 2.0);
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.99, 8.0), 1.0);
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.95, 8.0), 4.0);
  EXPECT_DOUBLE_EQ(learning_rate_schedule(0.98, 8.0), 1.0);
}

TEST(Hqca, SingleSegmentExample) {
  const VirtualSpectrometer v = flat(single_member(no_h0()), 1);
  const GradientVector g = hqca_gradient(ControlPulse::zeros(1, 2.0), v, Target::state("ZI", "YI"), RotationModel{});
  EXPECT_NEAR(g.gx[0], -2.0 * 0.002, 1e-14);
  EXPECT_NEAR(g.gy[0], 0.0, 1e-14);
}

TEST(Hqca, StationaryPointGivesZeroGradient) {
  const VirtualSpectrometer v = flat(lorentzian_ensemble({10.0, 5, 20.0}, reference_system()));
  const GradientVector g = hqca_gradient(ControlPulse::zeros(100, 2.0), v, Target::state("ZI", "ZI"), RotationModel{});
  EXPECT_LT(g.norm(), 1e-14);
}

TEST(Hqca, SinThetaLaw) {
  std::mt19937_64 rng(31);
  const VirtualSpectrometer v = flat(lorentzian_ensemble({10.0, 5, 20.0}, reference_system()));
  const ControlPulse p = random_pulse(100, rng);
  RotationModel half;
  RotationModel quarter;
  quarter.theta = M_PI / 4.0;
  const GradientVector a = hqca_gradient(p, v, Target::gate2(), half);
  const GradientVector b = hqca_gradient(p, v, Target::gate2(), quarter);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(b.gx[i], std::sin(M_PI / 4.0) * a.gx[i], 1e-8);
    EXPECT_NEAR(b.gy[i], std::sin(M_PI / 4.0) * a.gy[i], 1e-8);
  }
}

TEST(Hqca, AlignsWithAnalyticGradient) {
  std::mt19937_64 rng(32);
  const VirtualSpectrometer v = flat(lorentzian_ensemble({10.0, 5, 20.0}, reference_system()));
  for (int k = 0; k < 5; ++k) {
    const ControlPulse p = random_pulse(100, rng);
    for (const Target& t : {Target::gate2(), Target::gate1()}) {
      const double c = direction_cosine(hqca_gradient(p, v, t, RotationModel{}), v.exact_gradient(p, t));
      EXPECT_GT(c, 0.99) << k;
    }
  }
}

TEST(Hqca, NoiseIsSeededPerComponent) {
  std::mt19937_64 rng(33);
  const VirtualSpectrometer v = flat(single_member(reference_system()), 100, 0.05, 3);
  const ControlPulse p = random_pulse(100, rng);
  const GradientVector a = hqca_gradient(p, v, Target::gate2(), RotationModel{}, 3, 4);
  const GradientVector b = hqca_gradient(p, v, Target::gate2(), RotationModel{}, 3, 4);
  const GradientVector c = hqca_gradient(p, v, Target::gate2(), RotationModel{}, 3, 5);
  EXPECT_EQ(a.gx, b.gx);
  EXPECT_EQ(a.gy, b.gy);
  EXPECT_NE(a.gx, c.gx);
}

TEST(Fd, CanonicalMatchesAnalytic) {
  std::mt19937_64 rng(34);
  const VirtualSpectrometer v = flat(single_member(reference_system()));
  const ControlPulse p = random_pulse(100, rng);
  const GradientVector fd = fd_gradient(p, v, Target::gate2(), make_canonical_basis(100), 1e-3);
  EXPECT_LT(relative_error(fd, v.exact_gradient(p, Target::gate2())), 1e-2);
}

TEST(Fd, ChainRuleThroughLinearDistortion) {
  std::mt19937_64 rng(35);
  const TransferFunction t = synthesize_transfer(70.0, TransferKind::measured_like);
  const VirtualSpectrometer v(single_member(reference_system()), DistortionOperator(t, 100, 2.0), MeasurementModel{}, t);
  const ControlPulse p = random_pulse(100, rng);
  const GradientVector fd = fd_gradient(p, v, Target::gate2(), make_canonical_basis(100), 1e-4);
  // exact_gradient is K^H applied to the analytic gradient at the distorted pulse.
  const ControlPulse pd = v.transfer().apply(p);
  const VirtualSpectrometer on_distorted = flat(single_member(reference_system()));
  const GradientVector chain = v.transfer().transpose_apply(on_distorted.exact_gradient(pd, Target::gate2()));
  EXPECT_LT(relative_error(fd, chain), 1e-6);
}

TEST(Fd, SlepianGradientLiesInSubspace) {
  std::mt19937_64 rng(36);
  const VirtualSpectrometer v = flat(single_member(reference_system()));
  const BasisSet b = make_slepian_basis(100, 0.12);
  ASSERT_EQ(b.size(), 24u);
  const GradientVector g = fd_gradient(random_pulse(100, rng), v, Target::gate2(), b, 1.0);
  for (Channel c : {Channel::x, Channel::y}) {
    std::vector<double> r = g.channel(c);
    for (const auto& vec : b.vectors) {
      double d = 0.0;
      for (int i = 0; i < 100; ++i) d += vec[i] * g.channel(c)[i];
      for (int i = 0; i < 100; ++i) r[i] -= d * vec[i];
    }
    double rn = 0.0;
    for (double x : r) rn += x * x;
    EXPECT_LT(std::sqrt(rn), 1e-10);
  }
}

TEST(Fd, ThreadsDoNotChangeResult) {
  std::mt19937_64 rng(37);
  const VirtualSpectrometer v = flat(single_member(reference_system()), 100, 0.05, 9);
  const ControlPulse p = random_pulse(100, rng);
  const BasisSet b = make_linear_basis(100);
  const GradientVector a = fd_gradient(p, v, Target::gate2(), b, 2.0, 9, 1, 1);
  const GradientVector c = fd_gradient(p, v, Target::gate2(), b, 2.0, 9, 1, 3);
  EXPECT_EQ(a.gx, c.gx);
  EXPECT_EQ(a.gy, c.gy);
  EXPECT_THROW(fd_gradient(p, v, Target::gate2(), b, 0.0), std::invalid_argument);
}

TEST(Grape, MatchesNoiselessFdWhenModelIsTruth) {
  std::mt19937_64 rng(38);
  const VirtualSpectrometer v = flat(lorentzian_ensemble({10.0, 5, 20.0}, reference_system()));
  const ControlPulse p = random_pulse(100, rng);
  const double c = direction_cosine(grape_gradient(p, v, Target::gate2()),
                                    fd_gradient(p, v, Target::gate2(), make_linear_basis(100), 1e-3));
  EXPECT_GT(c, 0.999);
  EXPECT_LT(grape_gradient(ControlPulse::zeros(100, 2.0), v, Target::state("ZI", "ZI")).norm(), 1e-14);
}

TEST(Grape, MismatchedModelGivesDifferentGradient) {
  std::mt19937_64 rng(39);
  SpinSystem model;
  model.a = 72.0;
  const ControlPulse p = random_pulse(100, rng);
  const GradientVector gm = grape_gradient(p, flat(single_member(model)), Target::gate2());
  const GradientVector gt = grape_gradient(p, flat(single_member(reference_system())), Target::gate2());
  EXPECT_GT(relative_error(gm, gt), 0.01);
}

TEST(Budget, ExperimentsPerGradient) {
  OptimizerConfig c;
  c.method = Method::hqca;
  EXPECT_EQ(experiments_per_gradient(c, 100, Target::gate2()), 400);
  c.method = Method::fd;
  c.basis = make_linear_basis(100);
  EXPECT_EQ(experiments_per_gradient(c, 100, Target::gate2()), 400);
  c.basis = make_slepian_basis(100, 0.12);
  EXPECT_EQ(experiments_per_gradient(c, 100, Target::gate2()), 4 * 24);
  c.method = Method::grape;
  EXPECT_EQ(experiments_per_gradient(c, 100, Target::gate2()), 0);
}

TEST(Run, ZeroIterationsRecordsInitialPulse) {
  OptimizerConfig c;
  c.method = Method::hqca;
  c.max_iters = 0;
  const VirtualSpectrometer v = flat(single_member(reference_system()));
  const auto h = run_optimization(c, v, Target::gate2(), ControlPulse::square(100, 2.0, 20.0, 0.0));
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].index, 0);
  EXPECT_EQ(h[0].cumulative_experiments, 0);
}

TEST(Run, HqcaChargesBudgetAndIsDeterministic) {
  OptimizerConfig c;
  c.method = Method::hqca;
  c.max_iters = 3;
  c.stop_window = 10;
  c.seed = 17;
  const VirtualSpectrometer v = flat(lorentzian_ensemble({10.0, 3, 10.0}, reference_system()), 100, 0.03, 17);
  const ControlPulse init = ControlPulse::square(100, 2.0, 20.0, 0.0);
  const auto a = run_optimization(c, v, Target::gate2(), init);
  const auto b = run_optimization(c, v, Target::gate2(), init);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, static_cast<int>(i));
    EXPECT_EQ(a[i].cumulative_experiments, 400LL * static_cast<long long>(i));
    EXPECT_EQ(a[i].fidelity, b[i].fidelity);
    EXPECT_EQ(a[i].pulse.ux, b[i].pulse.ux);
  }
  EXPECT_GT(a.back().true_fidelity, a.front().true_fidelity);
}

TEST(Run, GrapeReachesDesignTarget) {
  OptimizerConfig c;
  c.method = Method::grape;
  c.max_iters = 200;
  c.stop_window = 200;
  c.calibration = OptimizerConfig::Calibration::step;
  const VirtualSpectrometer v = flat(single_member(reference_system()));
  const auto h = run_optimization(c, v, Target::gate2(), ControlPulse::square(100, 2.0, 20.0, 0.0));
  EXPECT_GE(h.back().fidelity, 0.99);
  EXPECT_EQ(h.back().cumulative_experiments, 0);
}

TEST(Run, StopRuleEndsStalledRuns) {
  OptimizerConfig c;
  c.method = Method::grape;
  c.max_iters = 500;
  c.stop_window = 5;
  c.stop_threshold = 0.01;
  const VirtualSpectrometer v = flat(single_member(reference_system()));
  const auto h = run_optimization(c, v, Target::gate2(), ControlPulse::square(100, 2.0, 20.0, 0.0));
  ASSERT_LT(h.size(), 501u);
  const auto& last = h.back();
  EXPECT_LT(last.true_fidelity - h[h.size() - 6].true_fidelity, 0.01);
}

TEST(Run, InvalidConfigRejected) {
  OptimizerConfig c;
  c.stop_window = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OptimizerConfig{};
  c.max_iters = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OptimizerConfig{};
  c.rotation.theta = 4.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_method("fd"), Method::fd);
  EXPECT_THROW(parse_method("nelder-mead"), std::invalid_argument);
}

TEST(History, JsonlAndCsv) {
  OptimizerConfig c;
  c.method = Method::fd;
  c.basis = make_slepian_basis(100, 0.12);
  c.max_iters = 2;
  c.stop_window = 10;
  const VirtualSpectrometer v = flat(single_member(reference_system()), 100, 0.03, 2);
  const auto h = run_optimization(c, v, Target::gate2(), ControlPulse::square(100, 2.0, 20.0, 0.0));
  std::stringstream js;
  write_history_jsonl(js, h, "fd/0", 2, "abc");
  std::string line;
  int n = 0;
  while (std::getline(js, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["run"], "fd/0");
    EXPECT_EQ(j["config_hash"], "abc");
    EXPECT_EQ(j["iteration"], n);
    EXPECT_EQ(j["ux"].size(), 100u);
    if (n > 0) {
      EXPECT_GT(j["delta_u"].get<double>(), 0.0);
      EXPECT_EQ(j["experiments"], 96);
    }
    ++n;
  }
  EXPECT_EQ(n, 3);
  std::stringstream cs;
  write_history_csv(cs, h);
  std::getline(cs, line);
  EXPECT_EQ(line, "iteration,fidelity,true_fidelity,gradient_norm,learning_rate,cumulative_experiments");
}

}  // namespace
}  // namespace spinqoc

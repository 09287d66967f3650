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

#include "spinqoc/propagator.hpp"
#include "spinqoc/spectrometer.hpp"

namespace spinqoc {
namespace {

ControlPulse random_pulse(int m, std::mt19937_64& rng, double amp = 30.0) {
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

TransferFunction pure_delay(double tau_ns) {
  TransferFunction t = TransferFunction::flat(300.0, 0.01);
  for (std::size_t i = 0; i < t.freq_grid.size(); ++i)
    t.response[i] = std::polar(1.0, -2.0 * M_PI * t.freq_grid[i] * tau_ns * 1e-3);
  return t;
}

TEST(Transfer, FlatIsIdentity) {
  std::mt19937_64 rng(21);
  const ControlPulse p = random_pulse(100, rng);
  const ControlPulse q = distort(p, TransferFunction::flat());
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(q.ux[i], p.ux[i], 1e-12);
    EXPECT_NEAR(q.uy[i], p.uy[i], 1e-12);
  }
  EXPECT_TRUE(DistortionOperator(TransferFunction::flat(), 100, 2.0).is_identity());
}

TEST(Transfer, PureDelayShiftsPulse) {
  std::mt19937_64 rng(22);
  const ControlPulse p = random_pulse(50, rng);
  const ControlPulse q = distort(p, pure_delay(6.0));
  for (int i = 0; i < 50; ++i) {
    const double ex = i >= 3 ? p.ux[i - 3] : 0.0;
    const double ey = i >= 3 ? p.uy[i - 3] : 0.0;
    EXPECT_NEAR(q.ux[i], ex, 1e-4) << i;
    EXPECT_NEAR(q.uy[i], ey, 1e-4) << i;
  }
}

TEST(Transfer, NarrowBandBroadensSpike) {
  ControlPulse spike = ControlPulse::zeros(100, 2.0);
  spike.ux[50] = 10.0;
  const ControlPulse q = distort(spike, synthesize_transfer(70.0, TransferKind::lorentzian));
  EXPECT_LT(std::hypot(q.ux[50], q.uy[50]), 10.0 * 0.8);
  EXPECT_GT(std::hypot(q.ux[51], q.uy[51]), 0.5);
  EXPECT_GT(std::hypot(q.ux[52], q.uy[52]), 0.1);
}

TEST(Transfer, SynthesizedShapes) {
  for (auto kind : {TransferKind::lorentzian, TransferKind::measured_like}) {
    for (double fwhm : {70.0, 130.0}) {
      const TransferFunction t = synthesize_transfer(fwhm, kind);
      EXPECT_NO_THROW(t.validate());
      EXPECT_NEAR(std::abs(t.at(0.0)), 1.0, 1e-12);
      EXPECT_NEAR(std::abs(t.at(fwhm / 2)), 0.5, 0.01);
      EXPECT_NEAR(std::abs(t.at(-fwhm / 2)), 0.5, 0.01);
    }
    const TransferFunction narrow = synthesize_transfer(70.0, kind);
    const TransferFunction wide = synthesize_transfer(130.0, kind);
    for (std::size_t i = 0; i < narrow.freq_grid.size(); ++i)
      if (std::abs(narrow.freq_grid[i]) > 20.0) EXPECT_LE(std::abs(narrow.response[i]), std::abs(wide.response[i]));
  }
  const TransferFunction m = synthesize_transfer(130.0, TransferKind::measured_like);
  EXPECT_GT(std::abs(std::abs(m.at(36.0)) - std::abs(m.at(-36.0))), 1e-3);
  EXPECT_THROW(synthesize_transfer(0.0, TransferKind::lorentzian), std::invalid_argument);
}

TEST(Transfer, ValidateRejectsBadGrids) {
  TransferFunction t = TransferFunction::flat(10.0, 1.0);
  t.freq_grid[3] += 0.5;
  EXPECT_ANY_THROW(t.validate());
  TransferFunction u = TransferFunction::flat(10.0, 1.0);
  u.response[2] = cplx(std::nan(""), 0.0);
  EXPECT_ANY_THROW(u.validate());
}

TEST(Transfer, NarrowGridRejected) {
  std::mt19937_64 rng(23);
  const ControlPulse p = random_pulse(100, rng);
  EXPECT_THROW(distort(p, TransferFunction::flat(20.0, 0.25)), std::invalid_argument);
}

TEST(Transfer, DistortIsLinearAndOperatorAgrees) {
  std::mt19937_64 rng(24);
  const TransferFunction t = synthesize_transfer(70.0, TransferKind::measured_like);
  const ControlPulse a = random_pulse(100, rng), b = random_pulse(100, rng);
  ControlPulse mix = a;
  for (int i = 0; i < 100; ++i) {
    mix.ux[i] = 2.0 * a.ux[i] - 0.5 * b.ux[i];
    mix.uy[i] = 2.0 * a.uy[i] - 0.5 * b.uy[i];
  }
  const ControlPulse da = distort(a, t), db = distort(b, t), dm = distort(mix, t);
  const DistortionOperator op(t, 100, 2.0);
  const ControlPulse om = op.apply(mix);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(dm.ux[i], 2.0 * da.ux[i] - 0.5 * db.ux[i], 1e-10);
    EXPECT_NEAR(dm.uy[i], 2.0 * da.uy[i] - 0.5 * db.uy[i], 1e-10);
    EXPECT_NEAR(om.ux[i], dm.ux[i], 1e-10);
    EXPECT_NEAR(om.uy[i], dm.uy[i], 1e-10);
  }
}

TEST(Transfer, TransposeIsAdjointOfApply) {
  std::mt19937_64 rng(25);
  const DistortionOperator op(synthesize_transfer(70.0, TransferKind::lorentzian), 100, 2.0);
  const ControlPulse u = random_pulse(100, rng);
  const ControlPulse r = random_pulse(100, rng);
  GradientVector g{r.ux, r.uy};
  const ControlPulse ku = op.apply(u);
  const GradientVector ktg = op.transpose_apply(g);
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < 100; ++i) {
    lhs += ku.ux[i] * g.gx[i] + ku.uy[i] * g.gy[i];
    rhs += u.ux[i] * ktg.gx[i] + u.uy[i] * ktg.gy[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
}

TEST(Transfer, CsvRoundTrip) {
  const TransferFunction t = synthesize_transfer(130.0, TransferKind::measured_like);
  const std::string path = ::testing::TempDir() + "transfer_rt.csv";
  save_transfer_csv(path, t);
  const TransferFunction u = load_transfer_csv(path);
  ASSERT_EQ(u.freq_grid.size(), t.freq_grid.size());
  for (double f : {-80.0, -36.0, 0.0, 12.3, 36.0})
    EXPECT_NEAR(std::abs(u.at(f) - t.at(f)), 0.0, 1e-12);
  EXPECT_ANY_THROW(load_transfer_csv(::testing::TempDir() + "does_not_exist.csv"));
}

TEST(Noise, StreamsAreDeterministicAndDistinct) {
  NoiseStream a(7, 3, 11), b(7, 3, 11), c(7, 3, 12), d(7, 3, 11, 1);
  const double x = a.gaussian(1.0);
  EXPECT_EQ(x, b.gaussian(1.0));
  EXPECT_NE(x, c.gaussian(1.0));
  EXPECT_NE(x, d.gaussian(1.0));
}

TEST(Measurement, QualityFromSignals) {
  EXPECT_DOUBLE_EQ(control_quality({1.0, -1.0}, GateKind::gate2), 1.0);
  EXPECT_DOUBLE_EQ(control_quality({1.0, 1.0}, GateKind::gate2), 0.0);
  EXPECT_DOUBLE_EQ(control_quality({1.0, 1.0}, GateKind::gate1), 1.0);
  EXPECT_EQ(parse_gate("gate1"), GateKind::gate1);
  EXPECT_EQ(gate_name(GateKind::gate2), "gate2");
  EXPECT_ANY_THROW(parse_gate("gate3"));
}

VirtualSpectrometer flat_spectrometer(const Ensemble& e, double sigma = 0.0, std::uint64_t seed = 1) {
  return VirtualSpectrometer(e, DistortionOperator::identity(100, 2.0), MeasurementModel{sigma, seed, 16000});
}

TEST(Measurement, IdealReadoutOfZiAndZz) {
  SpinSystem s;
  s.a = 72.0;
  const VirtualSpectrometer v = flat_spectrometer(single_member(s));
  // Zero pulse leaves ZI untouched: both allowed lines at full thermal polarization.
  const SignalPair zi = v.ideal_signals(ControlPulse::zeros(100, 2.0), Target::gate2());
  EXPECT_NEAR(zi.sl, 1.0, 1e-12);
  EXPECT_NEAR(zi.sr, 1.0, 1e-12);
  // A state exactly ZZ reads (1, -1): the observable maps ZZ to F = 1 and ZI to 0.
  const CMat o = v.quality_observable(Target::gate2());
  EXPECT_NEAR(pauli_state("ZZ").matrix.re_trace_with_hermitian(o), 1.0, 1e-12);
  EXPECT_NEAR(pauli_state("ZI").matrix.re_trace_with_hermitian(o), 0.0, 1e-12);
}

TEST(Measurement, Gate2ReadoutEqualsEnsembleFidelity) {
  std::mt19937_64 rng(26);
  const Ensemble e = lorentzian_ensemble({10.0, 5, 20.0}, reference_system());
  const VirtualSpectrometer v = flat_spectrometer(e);
  const CMat frame = diagonalize(reference_system()).eigenbasis;
  const CMat zi = pauli_state("ZI").matrix;
  const CMat zz = frame * pauli_state("ZZ").matrix * frame.adjoint();
  for (int k = 0; k < 10; ++k) {
    const ControlPulse p = random_pulse(100, rng);
    double f = 0.0;
    for (const auto& m : e) f += m.weight * state_fidelity(zi, zz, propagate(p, m.system).total_unitary);
    EXPECT_NEAR(v.true_quality(p, Target::gate2()), f, 1e-9);
  }
  // Without pseudo-secular coupling the frame is the product basis.
  SpinSystem b0;
  b0.a = 72.0;
  const Ensemble e0 = lorentzian_ensemble({10.0, 5, 20.0}, b0);
  const ControlPulse p = random_pulse(100, rng);
  EXPECT_NEAR(flat_spectrometer(e0).true_quality(p, Target::gate2()),
              ensemble_fidelity(p, e0, pauli_state("ZI"), pauli_state("ZZ")), 1e-9);
}

TEST(Measurement, NoiseStatistics) {
  SpinSystem s;
  s.a = 72.0;
  const VirtualSpectrometer v = flat_spectrometer(single_member(s), 0.03, 99);
  const SignalPair clean = v.ideal_signals(ControlPulse::zeros(100, 2.0), Target::gate2());
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0, fsum = 0.0, fsum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    NoiseStream st(99, 0, i);
    const SignalPair sp = v.add_noise(clean, st);
    sum += sp.sl;
    sum2 += sp.sl * sp.sl;
    const double f = control_quality(sp, GateKind::gate2);
    fsum += f;
    fsum2 += f * f;
  }
  const double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
  const double fvar = (fsum2 - fsum * fsum / n) / (n - 1);
  EXPECT_NEAR(sd, 0.03, 0.001);
  // Sample variance of a Gaussian has relative std sqrt(2/(n-1)) ~ 1.4%; allow 5%.
  EXPECT_NEAR(fvar, 0.03 * 0.03 / 2.0, 0.05 * 0.03 * 0.03 / 2.0);
}

TEST(Measurement, SeededDeterminism) {
  SpinSystem s;
  s.a = 72.0;
  const VirtualSpectrometer v = flat_spectrometer(single_member(s), 0.1, 5);
  std::mt19937_64 rng(27);
  const ControlPulse p = random_pulse(100, rng);
  NoiseStream a(5, 2, 3), b(5, 2, 3);
  const SignalPair x = v.measure_signals(p, Target::gate2(), a);
  const SignalPair y = v.measure_signals(p, Target::gate2(), b);
  EXPECT_EQ(x.sl, y.sl);
  EXPECT_EQ(x.sr, y.sr);
}

TEST(Measurement, Gate1ReferenceAllowsValuesAboveOne) {
  const Ensemble e = lorentzian_ensemble({}, reference_system());
  const VirtualSpectrometer v = flat_spectrometer(e);
  const SignalPair ref = v.gate1_reference();
  EXPECT_GT(ref.sl, 0.2);
  EXPECT_LT(ref.sl, 1.0);
  EXPECT_GT(ref.sr, 0.2);
  EXPECT_LT(ref.sr, 1.0);
}

TEST(ErrorPropagation, WorkedExample) {
  EXPECT_DOUBLE_EQ(propagate_error(1.0, 0.94, 1.0, 1.0, 0, 0, 0, 0), 0.0);
  const double df = propagate_error(1.0, 0.94, 1.0, 1.0, 0.03, 0.02 * 0.94, 0.02, 0.02);
  EXPECT_NEAR(df, 0.04, 0.005);
  EXPECT_NEAR(df, 0.04480, 5e-5);
  EXPECT_THROW(propagate_error(1, 1, 0.0, 1, 0, 0, 0, 0), std::invalid_argument);
}

TEST(ErrorPropagation, MatchesMonteCarloOfRatioSum) {
  const double sl = 2.0, sr = 1.5, rl = 2.1, rr = 1.7;
  const double dsl = 0.03, dsr = 0.04, drl = 0.02, drr = 0.03;
  std::mt19937_64 rng(28);
  std::normal_distribution<double> n01;
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = (sl + dsl * n01(rng)) / (rl + drl * n01(rng)) + (sr + dsr * n01(rng)) / (rr + drr * n01(rng));
    s += f;
    s2 += f * f;
  }
  const double mc = std::sqrt((s2 - s * s / n) / (n - 1));
  const double formula = propagate_error(sl, sr, rl, rr, dsl, dsr, drl, drr);
  EXPECT_NEAR(formula / mc, 1.0, 0.05);
}

TEST(Budget, ChargesFourNMP) {
  ExperimentBudget b;
  b = charge_budget(b, 1, 100, 1);
  EXPECT_EQ(b.experiments_per_iteration, 400);
  EXPECT_EQ(b.cumulative, 400);
  b = charge_budget(b, 1, 100, 1);
  EXPECT_EQ(b.cumulative, 800);
  EXPECT_EQ(charge_budget({}, 0, 100, 1).cumulative, 0);
  EXPECT_THROW(charge_budget({}, -1, 100, 1), std::invalid_argument);
}

TEST(ChainRule, ExactGradientMatchesCentralDifferenceThroughTransfer) {
  std::mt19937_64 rng(29);
  const TransferFunction t = synthesize_transfer(70.0, TransferKind::measured_like);
  const VirtualSpectrometer v(single_member(reference_system()), DistortionOperator(t, 100, 2.0), MeasurementModel{}, t);
  const ControlPulse p = random_pulse(100, rng);
  const GradientVector g = v.exact_gradient(p, Target::gate2());
  double err = 0.0, ref = 0.0;
  for (Channel c : {Channel::x, Channel::y})
    for (int m = 0; m < 100; ++m) {
      ControlPulse a = p, b = p;
      a.channel(c)[m] += 1e-4;
      b.channel(c)[m] -= 1e-4;
      const double fd = (v.true_quality(a, Target::gate2()) - v.true_quality(b, Target::gate2())) / 2e-4;
      err += std::pow(fd - g.channel(c)[m], 2);
      ref += fd * fd;
    }
  EXPECT_LT(std::sqrt(err / ref), 1e-6);
}

}  // namespace
}  // namespace spinqoc

#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "iongate/sequence.hpp"
#include "support/chain.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace iongate;
using constants::two_pi;

namespace {

constexpr double kQuarterPi = constants::pi / 4.0;

const ModeData& chain() {
  static const ModeData m = testsupport::chain19_modes();
  return m;
}

GateDesign chain_design(std::size_t i, std::size_t j, std::size_t n_seg, double tau, double mu_ratio) {
  return design_gate(chain(), {i, j, n_seg, tau, mu_ratio * two_pi * 3e6, two_pi * 1e6, 0},
                     ThermalSpec::mean_phonon(0.5));
}

const GateDesign& pair56() {
  static const GateDesign d = chain_design(5, 6, 10, 80.4e-6, 0.995);
  return d;
}

const GateDesign& pair914() {
  static const GateDesign d = chain_design(9, 14, 24, 482e-6, 0.997);
  return d;
}

// Single shared mode with whole drive periods per segment.
GateDesign closed_loop_toy() {
  const ModeData m = testsupport::single_mode(1.0, 0.05);
  const double mu = 21.0 / 22.0;
  return design_gate(m, {0, 1, 1, 21.0 * two_pi / mu, mu, 0.0, 0}, ThermalSpec::mean_phonon(0.5));
}

RepeatPlan random_plan(std::size_t m_max, std::uint64_t seed) {
  RepeatPlan p;
  p.m_max = m_max;
  p.contiguous = false;
  p.seed = seed;
  p.draws = 16;
  return p;
}

}  // namespace

TEST(PhaseStatistics, ClosedLoopAngleIndependentOfPhase) {
  const PhaseStatistics st = phase_statistics(closed_loop_toy(), 32);
  ASSERT_EQ(st.theta.size(), 32u);
  EXPECT_LT(st.theta_max - st.theta_min, 1e-12);
  EXPECT_NEAR(std::abs(st.theta_mean), kQuarterPi, 1e-12);
}

TEST(PhaseStatistics, MeanRescaledHitsTarget) {
  const GateDesign d = mean_rescaled(pair914());
  const PhaseStatistics st = phase_statistics(d);
  EXPECT_NEAR(st.theta_mean, d.target_sign * kQuarterPi, 1e-10);
}

TEST(PhaseStatistics, ResidualCouplingInsensitiveToPhase) {
  const PhaseStatistics st = phase_statistics(pair914());
  EXPECT_LT(st.residual_max, 1e-3);
  EXPECT_LE(st.theta_min, st.theta_mean);
  EXPECT_GE(st.theta_max, st.theta_mean);
}

TEST(Repeat, SingleGateIsDesignInfidelity) {
  RepeatPlan p;
  p.m_max = 1;
  const RepeatResult r = repeat_infidelity(pair56(), p);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_NEAR(r.points[0].infidelity, pair56().solution.design_infidelity, 1e-13);
}

TEST(Repeat, ContiguousMatchesLongPulse) {
  const GateDesign& d = pair56();
  const std::size_t m = 4;
  const MagnusCoefficients acc =
      accumulate_gates(GateSchedule::contiguous(d.pulse, m), d.modes, d.ion_i, d.ion_j);
  PulseSequence long_pulse = d.pulse;
  long_pulse.n_seg = d.pulse.n_seg * m;
  long_pulse.tau = d.pulse.tau * static_cast<double>(m);
  long_pulse.omegas = d.pulse.omegas.replicate(static_cast<Eigen::Index>(m), 1);
  const MagnusCoefficients ref = magnus_coefficients(long_pulse, d.modes, d.ion_i, d.ion_j);
  EXPECT_NEAR(acc.theta, ref.theta, 1e-10 * std::abs(ref.theta));
  EXPECT_LT((acc.alpha - ref.alpha).cwiseAbs().maxCoeff(), 1e-10 * ref.alpha.cwiseAbs().maxCoeff() + 1e-15);
  EXPECT_NEAR(repeat_gate_infidelity(acc, d.coth, d.target_sign, m),
              repeat_gate_infidelity(ref, d.coth, d.target_sign, m), 1e-10);

  RepeatPlan p;
  p.m_max = m;
  EXPECT_NEAR(repeat_infidelity(d, p).points.back().infidelity,
              repeat_gate_infidelity(ref, d.coth, d.target_sign, m), 1e-10);
}

TEST(Repeat, RandomStartsSeededAndSpaced) {
  const RepeatPlan p = random_plan(10, 42);
  const double tau = 80e-6;
  const std::vector<double> a = plan_starts(p, tau, 10, 3);
  EXPECT_EQ(a, plan_starts(p, tau, 10, 3));
  EXPECT_NE(a, plan_starts(p, tau, 10, 4));
  EXPECT_NE(a, plan_starts(random_plan(10, 43), tau, 10, 3));
  for (std::size_t g = 1; g < a.size(); ++g) {
    EXPECT_GE(a[g] - a[g - 1], tau);
    EXPECT_LT(a[g] - a[g - 1], 2.0 * tau);
  }
}

TEST(Repeat, ExplicitStartsValidated) {
  RepeatPlan p;
  p.m_max = 2;
  p.starts = {0.0, 10e-6};
  EXPECT_THROW(repeat_infidelity(pair56(), p), Error);
  p.starts = {0.0};
  EXPECT_THROW(p.validate(), Error);
}

TEST(Repeat, RandomStartsAccumulateLinearly) {
  const GateDesign d = mean_rescaled(pair56());
  const RepeatResult r = repeat_infidelity(d, random_plan(20, 7));
  ASSERT_EQ(r.points.size(), 20u);
  EXPECT_LE(r.fit.exponent, 1.2);
  EXPECT_LE(r.exponent_ci_low, r.fit.exponent);
  EXPECT_GE(r.exponent_ci_high, r.fit.exponent);
  // cross-gate double integrals stay negligible against the gate angle
  EXPECT_LT(r.points.back().max_cross_theta, 1e-4 * kQuarterPi);
}

TEST(Repeat, ThreadCountDoesNotChangeResult) {
  const RepeatPlan p = random_plan(6, 11);
  const RepeatResult a = repeat_infidelity(pair56(), p, 1);
  const RepeatResult b = repeat_infidelity(pair56(), p, 4);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    EXPECT_EQ(a.points[k].infidelity, b.points[k].infidelity);
  }
  EXPECT_EQ(a.fit.exponent, b.fit.exponent);
}

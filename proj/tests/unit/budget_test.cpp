#include "iongate/budget.hpp"
#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "support/chain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace iongate;
using constants::two_pi;

namespace {

BeamConfig full_beam() {
  BeamConfig b;
  b.wavelength_m = 355e-9;
  b.detuning = two_pi * 33e12;
  b.waist_m = 2e-6;
  b.gamma_e = two_pi * 19.6e6;
  b.omega_01 = two_pi * 12.642812118e9;
  b.two_photon_detuning = two_pi * 3e6;
  return b;
}

// Uniform chain stand-in: spacing and a single eta are all the budget reads.
struct Bench {
  TrapSpec trap = testsupport::yb_chain(19);
  Crystal crystal;
  ModeData modes;
  Bench(double eta, double d_av) {
    trap.omega_rf = two_pi * 40e6;
    crystal.spacing_mean = d_av;
    modes = testsupport::single_mode(trap.omega_x, eta);
  }
  ErrorBudget run(const BeamConfig& beam, double n_bar, double heating = 0.0, double tau = 482e-6,
                  double omega_eff = two_pi * 0.5e6) const {
    return evaluate_budget(trap, crystal, modes, beam, {omega_eff, tau}, ThermalSpec::mean_phonon(n_bar), heating);
  }
};

}  // namespace

TEST(Budget, HigherOrderLambDicke) {
  const Bench s(0.11, 8.3e-6);
  EXPECT_NEAR(*s.run(full_beam(), 0.5).at("higher-order Lamb-Dicke").value, 0.00058564, 1e-15);
}

TEST(Budget, AdjacentCrosstalk) {
  const Bench s(0.11, 8.3e-6);
  EXPECT_NEAR(*s.run(full_beam(), 0.5).at("adjacent-beam crosstalk").value, 0.00018204621036700604, 1e-15);
}

TEST(Budget, PerpendicularThermalUsesStabilityRatio) {
  const Bench s(0.11, 8.3e-6);
  EXPECT_NEAR(*s.run(full_beam(), 0.0).at("perpendicular thermal motion").value, 8.77442073880244e-05, 1e-15);
}

TEST(Budget, ColdUnheatedFloors) {
  const double eta = 0.1;
  const Bench s(eta, 8.3e-6);
  const ErrorBudget b = s.run(full_beam(), 0.0, 0.0);
  EXPECT_EQ(*b.at("motional heating bound").value, 0.0);
  EXPECT_EQ(*b.at("Kerr shift").value, 0.0);
  EXPECT_DOUBLE_EQ(*b.at("higher-order Lamb-Dicke").value, std::pow(eta, 4));
}

TEST(Budget, EveryRowOnceAndNonNegative) {
  const Bench s(0.11, 8.3e-6);
  const ErrorBudget b = s.run(full_beam(), 0.5, 1.0);
  std::set<std::string> names, ids;
  for (const BudgetEntry& e : b.entries) {
    names.insert(e.source);
    ids.insert(e.formula_id);
    ASSERT_TRUE(e.value.has_value()) << e.source;
    EXPECT_GE(*e.value, 0.0) << e.source;
  }
  EXPECT_EQ(names.size(), b.entries.size());
  EXPECT_EQ(ids.size(), b.entries.size());
  const char* table[] = {"micro-motion", "rotating-wave approximation", "adiabatic elimination",
                         "spontaneous emission", "higher-order Lamb-Dicke", "adjacent-beam crosstalk",
                         "perpendicular thermal motion"};
  for (std::size_t k = 0; k < std::size(table); ++k) EXPECT_EQ(b.entries[k].source, table[k]);
  EXPECT_NEAR(*b.at("motional heating bound").value, 482e-6, 1e-18);
}

TEST(Budget, MissingParametersMarkEntries) {
  Bench s(0.11, 8.3e-6);
  s.trap.omega_rf.reset();
  BeamConfig beam = full_beam();
  beam.gamma_e.reset();
  beam.waist_m.reset();
  const ErrorBudget b = s.run(beam, 0.5);
  EXPECT_FALSE(b.at("micro-motion").value.has_value());
  EXPECT_EQ(b.at("micro-motion").missing, "omega_rf");
  EXPECT_FALSE(b.at("spontaneous emission").value.has_value());
  EXPECT_EQ(b.at("spontaneous emission").missing, "gamma_e");
  EXPECT_FALSE(b.at("adjacent-beam crosstalk").value.has_value());
  EXPECT_EQ(b.at("adjacent-beam crosstalk").missing, "beam_waist");
  EXPECT_TRUE(b.at("higher-order Lamb-Dicke").value.has_value());
}

TEST(Budget, RawRabiReproducesEffectiveCoupling) {
  BeamConfig beam = full_beam();
  const double w_eff = two_pi * 0.7e6;
  for (double r : {1.0, 10.0, 100.0}) {
    beam.intensity_ratio = r;
    const auto rabi = raw_rabi(beam, w_eff);
    ASSERT_TRUE(rabi.has_value());
    EXPECT_NEAR(rabi->first * rabi->second / (2.0 * *beam.detuning), w_eff, 1e-9 * w_eff);
    EXPECT_NEAR(std::pow(rabi->first / rabi->second, 2), r, 1e-9 * r);
  }
}

TEST(Budget, SpontaneousEmissionLinearInTauAndGamma) {
  const Bench s(0.11, 8.3e-6);
  BeamConfig beam = full_beam();
  const double a = *s.run(beam, 0.5, 0.0, 100e-6).at("spontaneous emission").value;
  const double b = *s.run(beam, 0.5, 0.0, 300e-6).at("spontaneous emission").value;
  EXPECT_NEAR(b / a, 3.0, 1e-12);
  beam.gamma_e = *beam.gamma_e * 2.0;
  EXPECT_NEAR(*s.run(beam, 0.5, 0.0, 100e-6).at("spontaneous emission").value / a, 2.0, 1e-12);
}

TEST(Budget, StrongWeakTradeoff) {
  const Bench s(0.11, 8.3e-6);
  BeamConfig beam = full_beam();
  const ErrorBudget equal = s.run(beam, 0.5);
  beam.intensity_ratio = 10.0;
  const ErrorBudget skewed = s.run(beam, 0.5);
  EXPECT_NEAR(*skewed.at("AC Stark asymmetry").value / *equal.at("AC Stark asymmetry").value, 0.1, 1e-12);
  EXPECT_NEAR(*skewed.at("spontaneous emission").value / *equal.at("spontaneous emission").value,
              std::sqrt(10.0), 1e-12);
}

TEST(Budget, MicroMotionFormula) {
  const Bench s(0.11, 8.3e-6);
  const double w_eff = two_pi * 0.5e6;
  const double q = 2.0 * std::sqrt(2.0) * s.trap.omega_x / *s.trap.omega_rf;
  EXPECT_NEAR(*s.run(full_beam(), 0.5).at("micro-motion").value, std::pow(0.11 * q * w_eff / *s.trap.omega_rf, 2),
              1e-20);
}

TEST(Budget, AxialDriftTolerance) {
  const Bench s(0.11, 8.3e-6);
  EXPECT_NEAR(*s.run(full_beam(), 0.5).at("axial frequency drift tolerance").value, 0.5 * 2e-6 / (19 * 8.3e-6),
              1e-15);
}

TEST(Budget, WarnsOnSmallDetuning) {
  const Bench s(0.11, 8.3e-6);
  BeamConfig beam = full_beam();
  beam.detuning = two_pi * 1e9;
  EXPECT_FALSE(s.run(beam, 0.5).warnings.empty());
  EXPECT_TRUE(s.run(full_beam(), 0.5).warnings.empty());
}

namespace {

ControlErrors zeros() {
  ControlErrors e;
  e.d_mu = e.rel_omega = e.d_tau = e.d_mu_asym = e.rel_omega_asym = 0.0;
  e.phi_m_asym = e.phi_s = e.d_phi = e.d_omega_x = e.rel_omega_z = 0.0;
  return e;
}

std::vector<std::string> failing(const ControlErrors& e) {
  std::vector<std::string> out;
  for (const RequirementRow& r : requirements_check(e)) {
    if (!r.pass) out.push_back(r.name);
  }
  return out;
}

}  // namespace

TEST(Requirements, ZerosPass) {
  EXPECT_EQ(requirements_check(zeros()).size(), 10u);
  EXPECT_TRUE(failing(zeros()).empty());
}

TEST(Requirements, FlagsOnlyViolatedRows) {
  ControlErrors e = zeros();
  e.d_mu = two_pi * 1.5e3;
  EXPECT_EQ(failing(e), std::vector<std::string>{"detuning"});
  e = zeros();
  e.rel_omega_asym = 5e-4;
  EXPECT_EQ(failing(e), std::vector<std::string>{"rabi asymmetry"});
  e = zeros();
  e.d_tau = -0.5e-6;
  e.rel_omega_z = 0.004;
  e.phi_s = constants::pi / 50.0;
  EXPECT_EQ(failing(e), (std::vector<std::string>{"gate time", "spin phase"}));
}

TEST(Requirements, MissingValueRaised) {
  ControlErrors e = zeros();
  e.d_phi.reset();
  try {
    requirements_check(e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::MissingValue);
  }
}

namespace {

const GateDesign& pair56() {
  static const GateDesign d = design_gate(testsupport::chain19_modes(),
                                          {5, 6, 10, 80.4e-6, 0.995 * two_pi * 3e6, two_pi * 1e6, 0},
                                          ThermalSpec::mean_phonon(0.5));
  return d;
}

// The imbalance only rescales the angle by cos(d), so the excess over the
// baseline is the angle-error infidelity 0.8 sin^2(pi/4 (1 - cos d)).
double angle_error_infidelity(double d) {
  return 0.8 * std::pow(std::sin(constants::pi / 4.0 * (1.0 - std::cos(d))), 2);
}

}  // namespace

TEST(MotionalPhaseImbalance, ZeroIsBaseline) {
  EXPECT_NEAR(motional_phase_imbalance_infidelity(pair56(), 0.0), pair56().solution.design_infidelity, 1e-14);
}

TEST(MotionalPhaseImbalance, RequirementBoundHolds) {
  const double base = motional_phase_imbalance_infidelity(pair56(), 0.0);
  EXPECT_LT(motional_phase_imbalance_infidelity(pair56(), constants::pi / 100.0) - base, 1e-3);
}

TEST(MotionalPhaseImbalance, MatchesAngleErrorAndScalesAsFourthPower) {
  const std::vector<double> d{0.01, 0.02, 0.05, 0.1};
  const ImbalanceFit f = motional_phase_imbalance_fit(pair56(), d);
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_NEAR(f.infidelity[k] - f.baseline, angle_error_infidelity(d[k]), 0.02 * angle_error_infidelity(d[k]));
  }
  EXPECT_NEAR(f.fit.exponent, 4.0, 0.1);
  EXPECT_THROW(motional_phase_imbalance_infidelity(pair56(), 0.3), Error);
}

#include "iongate/constants.hpp"
#include "iongate/crystal.hpp"
#include "iongate/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace iongate;

namespace {

TrapSpec yb_chain(std::size_t n, double gamma4 = 4.3) {
  TrapSpec spec;
  spec.n_ions = n;
  spec.mass_kg = constants::yb171_mass_amu * constants::atomic_mass_unit;
  spec.charge_c = constants::elementary_charge;
  spec.omega_x = constants::two_pi * 3e6;
  spec.omega_y = constants::two_pi * 3.2e6;
  spec.axial = QuarticAxial{40e-6, gamma4};
  return spec;
}

}  // namespace

TEST(Equilibrium, SingleIonSitsAtWellMinimum) {
  const Crystal c = solve_equilibrium(yb_chain(1));
  EXPECT_NEAR(c.u[0], 1.0 / std::sqrt(4.3), 1e-12);
}

TEST(Equilibrium, TwoIonsMatchScalarRoot) {
  // -u + g u^3 - 1/(4u^2) = 0, bisection
  const double g = 4.3;
  double lo = 0.1;
  double hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = -mid + g * mid * mid * mid - 1.0 / (4.0 * mid * mid);
    (f > 0.0 ? hi : lo) = mid;
  }
  const Crystal c = solve_equilibrium(yb_chain(2));
  EXPECT_NEAR(c.u[1], 0.5 * (lo + hi), 1e-12);
  EXPECT_NEAR(c.u[0], -0.5 * (lo + hi), 1e-12);
}

TEST(Equilibrium, NineteenIonChain) {
  const Crystal c = solve_equilibrium(yb_chain(19));
  EXPECT_LT(c.gradient_norm, 1e-10);
  EXPECT_NEAR(c.spacing_mean, 8.3257e-6, 2e-9);
  EXPECT_NEAR(c.spacing_rsd, 0.02271, 2e-4);
  for (Eigen::Index i = 0; i < 19; ++i) EXPECT_NEAR(c.u[i], -c.u[18 - i], 1e-9);
}

TEST(Equilibrium, DerivativesMatchFiniteDifferences) {
  const AxialModel model{-1.0, 4.3};
  Eigen::VectorXd u(5);
  u << -0.71, -0.33, 0.02, 0.41, 0.8;
  const Eigen::VectorXd g = model.gradient(u);
  const Eigen::MatrixXd h = model.hessian(u);
  const double step = 1e-6;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    Eigen::VectorXd up = u;
    Eigen::VectorXd dn = u;
    up[i] += step;
    dn[i] -= step;
    const double fd = (model.energy(up) - model.energy(dn)) / (2.0 * step);
    EXPECT_NEAR(fd, g[i], 1e-6 * std::max(1.0, std::abs(g[i])));
    const Eigen::VectorXd hcol = (model.gradient(up) - model.gradient(dn)) / (2.0 * step);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      EXPECT_NEAR(hcol[j], h(j, i), 1e-6 * std::max(1.0, std::abs(h(j, i))));
    }
  }
}

TEST(Equilibrium, DimensionlessShapeIgnoresLengthUnit) {
  TrapSpec a = yb_chain(7);
  TrapSpec b = a;
  b.axial = QuarticAxial{55e-6, 4.3};
  const Crystal ca = solve_equilibrium(a);
  const Crystal cb = solve_equilibrium(b);
  EXPECT_LT((ca.u - cb.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(cb.positions[0] / ca.positions[0], 55.0 / 40.0, 1e-12);
}

TEST(Spacing, UniformChainHasZeroRsd) {
  Crystal c;
  c.positions = Eigen::Vector3d(-1e-6, 0.0, 1e-6);
  c.u = c.positions;
  const SpacingStats s = spacing_stats(c, {0, 3});
  EXPECT_DOUBLE_EQ(s.mean, 1e-6);
  EXPECT_NEAR(s.rsd, 0.0, 1e-15);
}

TEST(Spacing, EmptyWindowRejected) {
  Crystal c;
  c.positions = Eigen::Vector3d(0.0, 1.0, 2.0);
  try {
    spacing_stats(c, {2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyWindow);
  }
}

TEST(Spacing, HarmonicTrapWithMatchedSpacing) {
  TrapSpec spec = yb_chain(19);
  const Crystal quartic = solve_equilibrium(spec);
  spec.axial = harmonic_matching_spacing(spec, default_window(19), quartic.spacing_mean);
  const Crystal harmonic = solve_equilibrium(spec);
  EXPECT_NEAR(harmonic.spacing_mean, quartic.spacing_mean, 1e-12);
  EXPECT_NEAR(harmonic.spacing_rsd, 0.1124, 1e-3);
}

TEST(Gamma4, NineteenIonsNearPublishedValue) {
  const Gamma4Optimum opt = optimize_gamma4(yb_chain(19), 1.0, 10.0);
  EXPECT_FALSE(opt.degenerate);
  EXPECT_NEAR(opt.gamma4, 4.3, 0.1);
}

TEST(Gamma4, TwoIonsAreDegenerate) {
  const Gamma4Optimum opt = optimize_gamma4(yb_chain(2), 1.0, 10.0);
  EXPECT_TRUE(opt.degenerate);
  EXPECT_DOUBLE_EQ(opt.gamma4, 5.5);
}

TEST(Gamma4, FiveIonsAgreeWithDenseGrid) {
  const TrapSpec spec = yb_chain(5);
  double best_g = 0.0;
  double best_r = 1e9;
  for (int i = 0; i <= 900; ++i) {
    const double g = 1.0 + 0.01 * i;
    TrapSpec s = spec;
    s.axial = QuarticAxial{40e-6, g};
    const double r = spacing_stats(solve_equilibrium(s), {0, 5}).rsd;
    if (r < best_r) {
      best_r = r;
      best_g = g;
    }
  }
  const Gamma4Optimum opt = optimize_gamma4(spec, 1.0, 10.0, IonWindow{0, 5});
  EXPECT_NEAR(opt.gamma4, best_g, 0.011);
  EXPECT_NEAR(opt.rsd, best_r, 1e-5);
}

TEST(Modes, ComModeAtTrapFrequency) {
  const TrapSpec spec = yb_chain(19);
  const Crystal c = solve_equilibrium(spec);
  const double dk = 2.0 * constants::two_pi / 355e-9;
  const ModeData m = transverse_modes(spec, c, dk);
  EXPECT_NEAR(m.omega[0] / spec.omega_x, 1.0, 1e-9);
  for (Eigen::Index i = 0; i < 19; ++i) EXPECT_NEAR(m.b(i, 0), 1.0 / std::sqrt(19.0), 1e-9);
  EXPECT_LT((m.b.transpose() * m.b - Eigen::MatrixXd::Identity(19, 19)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((m.omega[0] - m.omega[18]) / spec.omega_x, 0.009);
  for (Eigen::Index k = 1; k < 19; ++k) EXPECT_LT(m.omega[k], m.omega[k - 1]);
  for (Eigen::Index k = 0; k < 19; ++k) EXPECT_NEAR(m.eta[k], 0.111, 0.002);

  const Eigen::MatrixXd h = transverse_hessian(spec, c);
  for (Eigen::Index k = 0; k < 19; ++k) {
    const Eigen::VectorXd r = h * m.b.col(k) - m.omega[k] * m.omega[k] * m.b.col(k);
    EXPECT_LE(r.norm(), 1e-9 * h.norm());
  }
}

TEST(Modes, WeakTransverseConfinementIsZigzag) {
  TrapSpec spec = yb_chain(19);
  const Crystal c = solve_equilibrium(spec);
  spec.omega_x = constants::two_pi * 0.2e6;
  try {
    transverse_modes(spec, c, 1e7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZigzagInstability);
  }
}

TEST(Stability, RatioFormula) {
  EXPECT_NEAR(linear_stability_ratio(2), 0.77 * 2.0 / std::sqrt(std::log(2.0)), 1e-12);
  EXPECT_NEAR(linear_stability_ratio(19), 8.53, 5e-3);
  EXPECT_THROW(linear_stability_ratio(1), Error);
}

#include "iongate/dynamics.hpp"
#include "iongate/error.hpp"
#include "support/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace iongate;
using testsupport::integrate;
using testsupport::integrate_complex;

namespace {

// Two ions, two modes, in units where tau is of order one.
ModeData toy_modes() {
  ModeData m;
  m.omega = Eigen::Vector2d(40.0, 37.5);
  m.eta = Eigen::Vector2d(0.11, 0.112);
  m.b.resize(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  m.b << r, r, r, -r;
  m.delta_k = 1.0;
  return m;
}

double piecewise(const Eigen::VectorXd& om, double tau, double t) {
  const auto n = static_cast<Eigen::Index>(om.size());
  auto k = static_cast<Eigen::Index>(t / tau * static_cast<double>(n));
  return om[std::clamp<Eigen::Index>(k, 0, n - 1)];
}

std::vector<double> breaks(double tau, std::size_t n_seg) {
  std::vector<double> b;
  for (std::size_t k = 1; k < n_seg; ++k) b.push_back(tau * static_cast<double>(k) / static_cast<double>(n_seg));
  return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(SegmentIntegrals, DividedDifferenceBranchesAgree) {
  // exp[0, z1, z2] straddling the series radius
  for (double s : {0.49, 0.51}) {
    const cplx z1(0.0, s);
    const cplx z2(0.0, 0.3 * s);
    const cplx direct = ((std::exp(z2) - 1.0) / z2 - (std::exp(z1) - 1.0) / z1) / (z2 - z1);
    EXPECT_LT(std::abs(integrals::exp_divided_difference(0.0, z1, z2) - direct), 1e-12);
  }
  EXPECT_LT(std::abs(integrals::exp_divided_difference(0.0, 0.0, 0.0) - 0.5), 1e-15);
  EXPECT_LT(std::abs(integrals::phi1(0.0) - 1.0), 1e-15);
}

TEST(SegmentIntegrals, TriangleMatchesQuadrature) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> nu(-60.0, 60.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double n1 = nu(rng);
    const double n2 = trial % 5 == 0 ? -n1 + 1e-7 : nu(rng);
    const double a = 0.3;
    const double b = 0.55;
    const cplx ref = integrate_complex(
        [&](double t1) {
          return std::exp(cplx(0.0, n1 * t1)) * integrals::exp_integral(n2, a, t1);
        },
        a, b);
    const cplx got = integrals::exp_triangle(n1, n2, a, b);
    EXPECT_LT(std::abs(got - ref), 1e-10 * std::max(1.0, std::abs(ref))) << n1 << " " << n2;
  }
}

TEST(Alpha, ZeroPulseAndLinearity) {
  const Eigen::RowVectorXcd row = alpha_row(40.0, 0.11, 0.7, 38.0, 2.0, 4);
  const Eigen::Vector4d om(1.0, -2.0, 0.5, 3.0);
  EXPECT_EQ(std::abs((row * Eigen::Vector4d::Zero().cast<cplx>())(0)), 0.0);
  const cplx a1 = (row * om.cast<cplx>())(0);
  const cplx a2 = (row * (2.0 * om).cast<cplx>())(0);
  EXPECT_LT(std::abs(a2 - 2.0 * a1), 1e-14);
}

TEST(Alpha, MatchesQuadrature) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double omega = 30.0 + 20.0 * u(rng);
    const double mu = omega * (0.95 + 0.1 * u(rng));
    const double tau = 1.0 + 3.0 * u(rng);
    const std::size_t n_seg = 1 + static_cast<std::size_t>(6.0 * u(rng));
    const double phi = 6.0 * u(rng);
    Eigen::VectorXd om(static_cast<Eigen::Index>(n_seg));
    for (auto& x : om) x = 2.0 * u(rng) - 1.0;
    const cplx got = (alpha_row(omega, 0.11, 0.4, mu, tau, n_seg, phi) * om.cast<cplx>())(0);
    const cplx ref = cplx(0.0, -0.11 * 0.4) *
                     integrate_complex(
                         [&](double t) {
                           return piecewise(om, tau, t) * std::sin(mu * t + phi) *
                                  std::exp(cplx(0.0, omega * t));
                         },
                         0.0, tau, breaks(tau, n_seg));
    EXPECT_LT(std::abs(got - ref), 1e-10 * std::abs(ref));
  }
}

TEST(Alpha, ResonantGrowthAndContinuity) {
  const double omega = 40.0;
  for (double tau : {5.0, 10.0, 20.0}) {
    const cplx a = alpha_row(omega, 0.1, 1.0, omega, tau, 1)(0);
    // resonant part eta b Omega tau / 2 plus a bounded counter-rotating term
    EXPECT_NEAR(std::abs(a), 0.1 * tau / 2.0, 0.1 / omega * 1.01);
  }
  // series branch against the elementary antiderivative just off resonance
  const double tau = 3.0;
  const double nu = 1e-6 / tau;
  const cplx closed = (std::exp(cplx(0.0, nu * tau)) - 1.0) / cplx(0.0, nu);
  EXPECT_LT(std::abs(integrals::exp_integral(nu, 0.0, tau) - closed), 1e-9 * tau);
  for (double z : {0.4999999, 0.5000001}) {
    const cplx lhs = integrals::phi1(cplx(0.0, z));
    EXPECT_LT(std::abs(lhs - (std::exp(cplx(0.0, z)) - 1.0) / cplx(0.0, z)), 1e-15);
  }
}

TEST(Lambda, ConstantPulseAndQuadrature) {
  const ModeData modes = toy_modes();
  PulseSequence seq;
  seq.n_seg = 1;
  seq.tau = 2.3;
  seq.mu = 38.1;
  seq.omegas = Eigen::VectorXd::Constant(1, 1.7);
  const Eigen::VectorXd lam = lambda_coeffs(seq, modes, 1);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double eb = modes.eta[k] * modes.b(1, k);
    EXPECT_NEAR(lam[k], eb * eb * 1.7 * std::sin(seq.mu * seq.tau) / seq.mu, 1e-15);
  }
  EXPECT_NEAR(carrier_angle(seq), 1.7 * std::sin(seq.mu * seq.tau) / seq.mu, 1e-15);

  seq.n_seg = 5;
  seq.omegas.resize(5);
  seq.omegas << 0.3, -1.2, 2.0, 0.7, -0.4;
  const double phi = 0.8;
  const Eigen::VectorXd lam5 = lambda_coeffs(seq, modes, 0, phi);
  const double integral = integrate(
      [&](double t) { return piecewise(seq.omegas, seq.tau, t) * std::cos(seq.mu * t + phi); }, 0.0,
      seq.tau, breaks(seq.tau, 5));
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double eb = modes.eta[k] * modes.b(0, k);
    EXPECT_LT(rel(lam5[k], eb * eb * integral), 1e-10);
  }
}

TEST(Theta, MatchesTimeOrderedQuadrature) {
  const ModeData modes = toy_modes();
  const double tau = 1.7;
  const double mu = 38.3;
  Eigen::Vector3d om(0.9, -1.4, 0.6);
  for (auto [pi, pj] : {std::pair{0.0, 0.0}, std::pair{0.4, -1.1}}) {
    const PairModel model(modes, 0, 1, mu, uniform_segments(tau, 3));
    const double got = model.theta(om, pi, pj);
    auto chi = [&](int ion, double t) {
      const double phi = ion == 0 ? pi : pj;
      return piecewise(om, tau, t) * std::sin(mu * t + phi);
    };
    double ref = 0.0;
    for (Eigen::Index k = 0; k < 2; ++k) {
      const double w = modes.eta[k] * modes.eta[k] * modes.b(0, k) * modes.b(1, k);
      const double omega = modes.omega[k];
      const double dbl = integrate(
          [&](double t1) {
            const double inner = integrate(
                [&](double t2) {
                  return (chi(0, t1) * chi(1, t2) + chi(1, t1) * chi(0, t2)) * std::sin(omega * (t1 - t2));
                },
                0.0, t1, breaks(tau, 3));
            return inner;
          },
          0.0, tau, breaks(tau, 3));
      ref += w * dbl;
    }
    EXPECT_LT(rel(got, ref), 1e-8);
    EXPECT_NEAR(om.dot(model.gamma(pi, pj) * om), got, 1e-14 * std::abs(got) + 1e-18);
    EXPECT_NEAR(model.theta(2.5 * om, pi, pj), 6.25 * got, 1e-12 * std::abs(got));
  }
}

TEST(Theta, GammaMatrixIsSymmetric) {
  const Eigen::MatrixXd g = gamma_matrix(toy_modes(), 0, 1, 38.0, 3.0, 6);
  EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_EQ(g.rows(), 6);
}

TEST(MotionalPhase, ShiftByPiFlipsAlphaKeepsTheta) {
  const ModeData modes = toy_modes();
  const PairModel model(modes, 0, 1, 38.0, uniform_segments(2.0, 4));
  const Eigen::Vector4d om(0.5, 1.0, -0.7, 0.2);
  const MagnusCoefficients a = model.coefficients(om, 0.3, 0.3);
  const MagnusCoefficients b = model.coefficients(om, 0.3 + M_PI, 0.3 + M_PI);
  EXPECT_LT((a.alpha + b.alpha).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(a.theta, b.theta, 1e-14);
}

TEST(Accumulate, SingleGateReduces) {
  const ModeData modes = toy_modes();
  PulseSequence seq;
  seq.n_seg = 4;
  seq.tau = 2.0;
  seq.mu = 38.0;
  seq.omegas = Eigen::Vector4d(0.5, 1.0, -0.7, 0.2);
  const MagnusCoefficients one = magnus_coefficients(seq, modes, 0, 1);
  const MagnusCoefficients acc = accumulate_gates(GateSchedule::contiguous(seq, 1), modes, 0, 1);
  EXPECT_LT((one.alpha - acc.alpha).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(one.theta, acc.theta);
}

TEST(Accumulate, ContiguousEqualsLongSequence) {
  const ModeData modes = toy_modes();
  PulseSequence seq;
  seq.n_seg = 4;
  seq.tau = 2.0;
  seq.mu = 38.0;
  seq.omegas = Eigen::Vector4d(0.5, 1.0, -0.7, 0.2);
  seq.phi_m_i = seq.phi_m_j = 0.4;
  const std::size_t m = 6;
  PulseSequence longer = seq;
  longer.n_seg = seq.n_seg * m;
  longer.tau = seq.tau * static_cast<double>(m);
  longer.omegas = seq.omegas.replicate(static_cast<Eigen::Index>(m), 1);
  const MagnusCoefficients direct = magnus_coefficients(longer, modes, 0, 1);
  const MagnusCoefficients acc = accumulate_gates(GateSchedule::contiguous(seq, m), modes, 0, 1);
  EXPECT_LT((direct.alpha - acc.alpha).cwiseAbs().maxCoeff(), 1e-10 * direct.alpha.cwiseAbs().maxCoeff());
  EXPECT_LT(std::abs(direct.theta - acc.theta), 1e-10 * std::abs(direct.theta));
}

TEST(Accumulate, TimeShiftOnlyRotatesAlpha) {
  const ModeData modes = toy_modes();
  PulseSequence seq;
  seq.n_seg = 3;
  seq.tau = 1.5;
  seq.mu = 38.0;
  seq.omegas = Eigen::Vector3d(0.5, -1.0, 0.8);
  GateSchedule s;
  s.pulse = seq;
  s.starts = {0.0};
  const MagnusCoefficients a = accumulate_gates(s, modes, 0, 1);
  s.starts = {0.37};
  const MagnusCoefficients b = accumulate_gates(s, modes, 0, 1);
  EXPECT_LT((a.alpha.cwiseAbs() - b.alpha.cwiseAbs()).cwiseAbs().maxCoeff(), 0.2 * a.alpha.cwiseAbs().maxCoeff());
}

TEST(Accumulate, OverlapRejected) {
  PulseSequence seq;
  seq.n_seg = 1;
  seq.tau = 1.0;
  seq.mu = 1.0;
  seq.omegas = Eigen::VectorXd::Ones(1);
  GateSchedule s;
  s.pulse = seq;
  s.starts = {0.0, 0.5};
  try {
    accumulate_gates(s, toy_modes(), 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OverlappingGates);
  }
}

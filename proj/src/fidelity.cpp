#include "iongate/fidelity.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"

#include <array>
#include <cmath>

namespace iongate {

namespace {

constexpr std::array<int, 4> kSi{1, 1, -1, -1};
constexpr std::array<int, 4> kSj{1, -1, 1, -1};

Eigen::Matrix2cd pauli(int k) {
  Eigen::Matrix2cd p;
  switch (k) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: p << 1, 0, 0, -1; break;
  }
  return p;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd out;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) out.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  }
  return out;
}

}  // namespace

ThermalSpec ThermalSpec::mean_phonon(double n_bar) {
  return ThermalSpec{MeanPhonon{Eigen::VectorXd::Constant(1, n_bar)}};
}

ThermalSpec ThermalSpec::temperature(double kelvin) { return ThermalSpec{Temperature{kelvin}}; }

void ThermalSpec::validate() const {
  if (const auto* t = std::get_if<Temperature>(&state)) {
    if (!(t->kelvin > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
  } else {
    const auto& n = std::get<MeanPhonon>(state).n_bar;
    if (n.size() == 0 || !(n.minCoeff() >= 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "mean phonon numbers must be non-negative");
    }
  }
}

Eigen::VectorXd ThermalSpec::coth(const ModeData& modes) const {
  validate();
  const auto n = static_cast<Eigen::Index>(modes.n_modes());
  Eigen::VectorXd out(n);
  if (const auto* t = std::get_if<Temperature>(&state)) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double x = constants::hbar * modes.omega[k] / (2.0 * constants::k_boltzmann * t->kelvin);
      out[k] = 1.0 / std::tanh(x);
    }
    return out;
  }
  const auto& nb = std::get<MeanPhonon>(state).n_bar;
  if (nb.size() == 1) return Eigen::VectorXd::Constant(n, 2.0 * nb[0] + 1.0);
  if (nb.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "per-mode phonon list length does not match the mode count");
  }
  return (2.0 * nb.array() + 1.0).matrix();
}

GammaFactors gamma_factors(const MagnusCoefficients& coeffs, const Eigen::VectorXd& coth) {
  GammaFactors g;
  double si = 0.0;
  double sj = 0.0;
  double sp = 0.0;
  double sm = 0.0;
  double eps = 0.0;
  for (Eigen::Index k = 0; k < coeffs.alpha.cols(); ++k) {
    const cplx ai = coeffs.alpha(0, k);
    const cplx aj = coeffs.alpha(1, k);
    si += std::norm(ai) * coth[k];
    sj += std::norm(aj) * coth[k];
    sp += std::norm(ai + aj) * coth[k];
    sm += std::norm(ai - aj) * coth[k];
    eps += (ai * std::conj(aj)).imag();
  }
  g.gamma_i = std::exp(-2.0 * si);
  g.gamma_j = std::exp(-2.0 * sj);
  g.gamma_plus = std::exp(-2.0 * sp);
  g.gamma_minus = std::exp(-2.0 * sm);
  g.epsilon = 2.0 * eps;
  return g;
}

GammaFactors gamma_factors(const MagnusCoefficients& coeffs, const ThermalSpec& thermal,
                           const ModeData& modes) {
  return gamma_factors(coeffs, thermal.coth(modes));
}

double avg_fidelity_exact(const GammaFactors& g, double theta, int target_sign) {
  const double s = target_sign >= 0 ? 1.0 : -1.0;
  return (4.0 + s * 2.0 * g.gamma_i * std::sin(2.0 * theta + g.epsilon) +
          s * 2.0 * g.gamma_j * std::sin(2.0 * theta - g.epsilon) + g.gamma_plus + g.gamma_minus) /
         10.0;
}

double avg_fidelity_exact(const MagnusCoefficients& coeffs, const Eigen::VectorXd& coth,
                          int target_sign) {
  return avg_fidelity_exact(gamma_factors(coeffs, coth), coeffs.theta, target_sign);
}

ApproxFidelity avg_fidelity_approx(const Eigen::VectorXd& omegas, const PairModel& model,
                                   const Eigen::VectorXd& coth, double phi_i, double phi_j) {
  ApproxFidelity out;
  out.m = model.residual_matrix(coth, phi_i, phi_j);
  out.fidelity = 1.0 - 0.8 * omegas.dot(out.m * omegas);
  return out;
}

FidelityReport fidelity_report(const Eigen::VectorXd& omegas, const PairModel& model,
                               const Eigen::VectorXd& coth, int target_sign, double phi_i,
                               double phi_j) {
  const MagnusCoefficients c = model.coefficients(omegas, phi_i, phi_j);
  FidelityReport r;
  r.gammas = gamma_factors(c, coth);
  r.theta = c.theta;
  r.target_sign = target_sign >= 0 ? 1 : -1;
  r.f_exact = avg_fidelity_exact(r.gammas, c.theta, r.target_sign);
  r.f_approx = avg_fidelity_approx(omegas, model, coth, phi_i, phi_j).fidelity;
  r.per_mode_residual.resize(c.alpha.cols());
  for (Eigen::Index k = 0; k < c.alpha.cols(); ++k) {
    r.per_mode_residual[k] = coth[k] * (std::norm(c.alpha(0, k)) + std::norm(c.alpha(1, k)));
  }
  return r;
}

DensityMatrix4 final_density_matrix(const DensityMatrix4& rho0, const MagnusCoefficients& coeffs,
                                    const Eigen::VectorXd& coth, bool include_lambda) {
  DensityMatrix4 out;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int dsi = kSi[a] - kSi[b];
      const int dsj = kSj[a] - kSj[b];
      double decay = 0.0;
      double phase = coeffs.theta * (kSi[a] * kSj[a] - kSi[b] * kSj[b]);
      cplx lam(1.0, 0.0);
      for (Eigen::Index k = 0; k < coeffs.alpha.cols(); ++k) {
        const cplx beta = static_cast<double>(kSi[a]) * coeffs.alpha(0, k) +
                          static_cast<double>(kSj[a]) * coeffs.alpha(1, k);
        const cplx beta_p = static_cast<double>(kSi[b]) * coeffs.alpha(0, k) +
                            static_cast<double>(kSj[b]) * coeffs.alpha(1, k);
        decay += 0.5 * std::norm(beta - beta_p) * coth[k];
        phase += (std::conj(beta_p) * beta).imag();
        if (include_lambda) {
          lam += cplx(0.0, 0.5 * coth[k] * (dsi * coeffs.lambda(0, k) + dsj * coeffs.lambda(1, k)));
        }
      }
      out(a, b) = rho0(a, b) * std::exp(-decay) * std::polar(1.0, phase) * lam;
    }
  }
  return out;
}

Eigen::Matrix4cd ideal_xx_pm(double theta) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 4; ++a) u(a, a) = std::polar(1.0, theta * kSi[a] * kSj[a]);
  return u;
}

Eigen::Matrix4cd xx_unitary(double theta, double phi_i, double phi_j) {
  auto sigma_n = [](double phi) {
    Eigen::Matrix2cd s;
    s << 0, std::polar(1.0, -phi), std::polar(1.0, phi), 0;
    return s;
  };
  const Eigen::Matrix4cd a = kron(sigma_n(phi_i), sigma_n(phi_j));
  return std::cos(theta) * Eigen::Matrix4cd::Identity() + cplx(0.0, std::sin(theta)) * a;
}

Eigen::Matrix4cd hadamard2() {
  Eigen::Matrix2cd h;
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return kron(h, h);
}

double avg_fidelity_from_channel(const Channel& channel, const Eigen::Matrix4cd& ideal) {
  cplx sum = 0.0;
  for (int p = 0; p < 4; ++p) {
    for (int q = 0; q < 4; ++q) {
      const Eigen::Matrix4cd w = kron(pauli(p), pauli(q));
      sum += (ideal * w.adjoint() * ideal.adjoint() * channel(w)).trace();
    }
  }
  return (sum.real() + 16.0) / 80.0;
}

double spin_phase_infidelity(double phi_s_i, double phi_s_j) {
  return 2.0 * (phi_s_i * phi_s_i + phi_s_j * phi_s_j) / 5.0;
}

}  // namespace iongate

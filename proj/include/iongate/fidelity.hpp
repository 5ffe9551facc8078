#pragma once

#include "iongate/crystal.hpp"
#include "iongate/dynamics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <variant>

namespace iongate {

struct Temperature {
  double kelvin = 0.0;
};

/// Mean phonon number, either one value for every mode or one per mode.
struct MeanPhonon {
  Eigen::VectorXd n_bar = Eigen::VectorXd::Constant(1, 0.5);
};

struct ThermalSpec {
  std::variant<MeanPhonon, Temperature> state = MeanPhonon{};

  static ThermalSpec mean_phonon(double n_bar);
  static ThermalSpec temperature(double kelvin);

  void validate() const;
  /// coth(hbar w_k / 2 k_B T) = 2 n_k + 1 for each mode.
  Eigen::VectorXd coth(const ModeData& modes) const;
};

struct GammaFactors {
  double gamma_i = 1.0;
  double gamma_j = 1.0;
  double gamma_plus = 1.0;
  double gamma_minus = 1.0;
  double epsilon = 0.0;
};

GammaFactors gamma_factors(const MagnusCoefficients& coeffs, const Eigen::VectorXd& coth);
GammaFactors gamma_factors(const MagnusCoefficients& coeffs, const ThermalSpec& thermal,
                           const ModeData& modes);

/// Thermal average gate fidelity against exp(i target_sign pi/4 sigma sigma).
double avg_fidelity_exact(const GammaFactors& g, double theta, int target_sign);
double avg_fidelity_exact(const MagnusCoefficients& coeffs, const Eigen::VectorXd& coth,
                          int target_sign);

struct ApproxFidelity {
  double fidelity = 1.0;
  Eigen::MatrixXd m;
};

ApproxFidelity avg_fidelity_approx(const Eigen::VectorXd& omegas, const PairModel& model,
                                   const Eigen::VectorXd& coth, double phi_i = 0.0,
                                   double phi_j = 0.0);

struct FidelityReport {
  double f_exact = 0.0;
  double f_approx = 0.0;
  GammaFactors gammas;
  double theta = 0.0;
  int target_sign = 1;
  Eigen::VectorXd per_mode_residual;  // coth_k (|alpha_i^k|^2 + |alpha_j^k|^2)
};

FidelityReport fidelity_report(const Eigen::VectorXd& omegas, const PairModel& model,
                               const Eigen::VectorXd& coth, int target_sign, double phi_i = 0.0,
                               double phi_j = 0.0);

/// Two-qubit operators are ordered |++>, |+->, |-+>, |--> in the eigenbasis
/// of the spin operator coupled by the gate.
using DensityMatrix4 = Eigen::Matrix4cd;

DensityMatrix4 final_density_matrix(const DensityMatrix4& rho0, const MagnusCoefficients& coeffs,
                                    const Eigen::VectorXd& coth, bool include_lambda = false);

/// exp(i theta sigma sigma) in the |+-> product basis.
Eigen::Matrix4cd ideal_xx_pm(double theta);

/// exp(i theta sigma_i^n sigma_j^n) in the computational basis, with
/// sigma^n = cos(phi) sigma_x + sin(phi) sigma_y.
Eigen::Matrix4cd xx_unitary(double theta, double phi_i = 0.0, double phi_j = 0.0);

/// Computational-basis to |+-> basis change, rho_pm = H rho H.
Eigen::Matrix4cd hadamard2();

using Channel = std::function<Eigen::Matrix4cd(const Eigen::Matrix4cd&)>;

double avg_fidelity_from_channel(const Channel& channel, const Eigen::Matrix4cd& ideal);

double spin_phase_infidelity(double phi_s_i, double phi_s_j);

}  // namespace iongate

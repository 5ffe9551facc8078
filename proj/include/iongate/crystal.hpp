#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

namespace iongate {

/// Axial confinement U = -a2 z^2/2 + a4 z^4/4, parametrized by the length
/// unit l0 = (e^2 / 4 pi eps0 a2)^(1/3) and the shape constant
/// gamma4 = a4 l0^2 / a2.
struct QuarticAxial {
  double l0_m = 0.0;
  double gamma4 = 0.0;
};

struct HarmonicAxial {
  double omega_z = 0.0;  // rad/s
};

using AxialPotential = std::variant<QuarticAxial, HarmonicAxial>;

struct TrapSpec {
  std::size_t n_ions = 0;
  double mass_kg = 0.0;
  double charge_c = 0.0;
  double omega_x = 0.0;  // rad/s
  double omega_y = 0.0;  // rad/s
  AxialPotential axial = QuarticAxial{};
  std::optional<double> omega_rf;  // rad/s
  std::optional<double> q_param;

  void validate() const;

  /// Mathieu q; defaults to 2 sqrt(2) omega_x / omega_rf. Empty when neither
  /// q_param nor omega_rf is set.
  std::optional<double> mathieu_q() const;

  /// Length unit of the dimensionless axial problem, metres.
  double length_unit() const;
};

/// Half-open ion index range [begin, end).
struct IonWindow {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
};

/// One cooling ion excluded at each end once the chain has at least four
/// ions; shorter chains use every ion.
IonWindow default_window(std::size_t n_ions);

struct SpacingStats {
  double mean = 0.0;  // m
  double rsd = 0.0;
};

struct Crystal {
  Eigen::VectorXd positions;  // m, ascending
  Eigen::VectorXd u;          // dimensionless positions
  IonWindow window;
  double spacing_mean = 0.0;
  double spacing_rsd = 0.0;
  double gradient_norm = 0.0;  // max-norm of dV/du at the solution
  int iterations = 0;

  std::size_t size() const { return static_cast<std::size_t>(positions.size()); }
};

struct ModeData {
  Eigen::VectorXd omega;  // rad/s, descending
  Eigen::MatrixXd b;      // b(ion, mode); columns orthonormal
  Eigen::VectorXd eta;    // Lamb-Dicke parameters
  double delta_k = 0.0;   // 1/m

  std::size_t n_modes() const { return static_cast<std::size_t>(omega.size()); }
  std::size_t n_ions() const { return static_cast<std::size_t>(b.rows()); }
};

/// Dimensionless axial potential V(u) = sum(c2 u^2/2 + c4 u^4/4) + Coulomb.
/// Quartic traps have c2 = -1, c4 = gamma4; harmonic traps c2 = 1, c4 = 0.
struct AxialModel {
  double c2 = 0.0;
  double c4 = 0.0;

  static AxialModel from(const AxialPotential& axial);

  double energy(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& u) const;
};

Crystal solve_equilibrium(const TrapSpec& spec,
                          const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt,
                          std::optional<IonWindow> window = std::nullopt);

SpacingStats spacing_stats(const Crystal& crystal, IonWindow window);

struct Gamma4Optimum {
  double gamma4 = 0.0;
  double rsd = 0.0;
  bool degenerate = false;
};

/// Golden-section minimization of the windowed spacing RSD over gamma4.
Gamma4Optimum optimize_gamma4(const TrapSpec& spec, double lo, double hi,
                              std::optional<IonWindow> window = std::nullopt,
                              double tolerance = 1e-3);

/// Harmonic axial frequency whose equilibrium reproduces `target_mean`
/// spacing inside `window`.
HarmonicAxial harmonic_matching_spacing(const TrapSpec& spec, IonWindow window,
                                        double target_mean);

ModeData transverse_modes(const TrapSpec& spec, const Crystal& crystal, double delta_k);

/// Transverse Hessian divided by mass, (rad/s)^2.
Eigen::MatrixXd transverse_hessian(const TrapSpec& spec, const Crystal& crystal);

/// Minimum omega_x / omega_z for a linear chain in a harmonic trap.
double linear_stability_ratio(std::size_t n_ions);

}  // namespace iongate

#pragma once

#include "iongate/crystal.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace iongate {

using cplx = std::complex<double>;

namespace integrals {

/// (e^z - 1) / z, finite at z = 0.
cplx phi1(cplx z);

/// Second divided difference of exp on three nodes (confluent nodes allowed).
cplx exp_divided_difference(cplx z0, cplx z1, cplx z2);

/// Integral of e^{i nu t} over [a, b].
cplx exp_integral(double nu, double a, double b);

/// Integral of e^{i nu1 t1} e^{i nu2 t2} over a <= t2 <= t1 <= b.
cplx exp_triangle(double nu1, double nu2, double a, double b);

}  // namespace integrals

/// Ordered, non-overlapping time intervals carrying one amplitude each.
struct SegmentList {
  std::vector<double> start;  // s
  std::vector<double> end;    // s

  std::size_t size() const { return start.size(); }
  void append(double a, double b);
  void validate() const;
};

SegmentList uniform_segments(double tau, std::size_t n_seg, double offset = 0.0);

struct PulseSequence {
  std::size_t n_seg = 0;
  double tau = 0.0;  // s
  double mu = 0.0;   // rad/s
  Eigen::VectorXd omegas;  // effective Rabi amplitudes, rad/s, signed
  double phi_m_i = 0.0;
  double phi_m_j = 0.0;
  double phi_s_i = 0.0;
  double phi_s_j = 0.0;

  void validate() const;
  SegmentList segments(double offset = 0.0) const { return uniform_segments(tau, n_seg, offset); }
};

struct MagnusCoefficients {
  Eigen::MatrixXcd alpha;    // (ion 0/1, mode)
  Eigen::MatrixXd lambda;    // (ion 0/1, mode)
  double theta = 0.0;
  Eigen::Vector2d carrier_angle = Eigen::Vector2d::Zero();
};

struct GateSchedule {
  std::vector<double> starts;  // s
  PulseSequence pulse;

  void validate() const;
  static GateSchedule contiguous(const PulseSequence& pulse, std::size_t m);
};

/// Segment tables for one ion pair driven by a shared amplitude vector.
/// Everything that depends on the amplitudes or the motional phases is a
/// cheap contraction of these tables, so scans over phi_m reuse them.
class PairModel {
 public:
  PairModel(const ModeData& modes, std::size_t ion_i, std::size_t ion_j, double mu,
            SegmentList segments);

  std::size_t n_seg() const { return segments_.size(); }
  std::size_t n_modes() const { return static_cast<std::size_t>(omega_.size()); }
  const SegmentList& segments() const { return segments_; }
  double mu() const { return mu_; }

  /// A(k, n) for ion 0 (= i) or 1 (= j) so that alpha^k = A.row(k) * omegas.
  Eigen::MatrixXcd a_matrix(int ion, double phi_m) const;

  Eigen::VectorXcd alpha(const Eigen::VectorXd& omegas, int ion, double phi_m) const;
  Eigen::VectorXd lambda(const Eigen::VectorXd& omegas, int ion, double phi_m) const;
  double carrier_angle(const Eigen::VectorXd& omegas, double phi_m) const;

  /// Lower-triangular gamma' and its symmetrization.
  Eigen::MatrixXd gamma_lower(double phi_i, double phi_j) const;
  Eigen::MatrixXd gamma(double phi_i, double phi_j) const;
  double theta(const Eigen::VectorXd& omegas, double phi_i, double phi_j) const;

  /// Re sum_k w_k (A_i^k^dagger A_i^k + A_j^k^dagger A_j^k).
  Eigen::MatrixXd residual_matrix(const Eigen::VectorXd& mode_weights, double phi_i,
                                  double phi_j) const;

  MagnusCoefficients coefficients(const Eigen::VectorXd& omegas, double phi_i, double phi_j) const;

 private:
  SegmentList segments_;
  double mu_;
  Eigen::VectorXd omega_;
  Eigen::MatrixXd eb_;  // eta_k b_j^k, (ion 0/1, mode)
  // E_n(omega_k + mu) and E_n(omega_k - mu), (mode, segment)
  Eigen::MatrixXcd e_plus_;
  Eigen::MatrixXcd e_minus_;
  Eigen::VectorXcd carrier_;  // integral of e^{i mu t} per segment
  // pair-weighted double-integral kernels for (s1, s2) = (+,+) and (+,-)
  Eigen::MatrixXcd k_pp_;
  Eigen::MatrixXcd k_pm_;
};

/// A_j^k row for one mode on [0, tau] split into n_seg equal segments.
Eigen::RowVectorXcd alpha_row(double omega_k, double eta_k, double b_jk, double mu, double tau,
                              std::size_t n_seg, double phi_m = 0.0);

/// lambda_j^k for chain ion `ion`, driven with motional phase `phi_m`.
Eigen::VectorXd lambda_coeffs(const PulseSequence& seq, const ModeData& modes, std::size_t ion,
                              double phi_m = 0.0);

Eigen::MatrixXd gamma_matrix(const ModeData& modes, std::size_t ion_i, std::size_t ion_j, double mu,
                             double tau, std::size_t n_seg);

double carrier_angle(const PulseSequence& seq, int which_ion = 0);

MagnusCoefficients magnus_coefficients(const PulseSequence& seq, const ModeData& modes,
                                       std::size_t ion_i, std::size_t ion_j);

/// Coefficients of several gates with absolute start times, including every
/// cross-gate term of the two-spin angle.
MagnusCoefficients accumulate_gates(const GateSchedule& schedule, const ModeData& modes,
                                    std::size_t ion_i, std::size_t ion_j);

/// Cross-gate contribution to the two-spin angle from a later gate (alpha_late)
/// acting after an earlier one (alpha_early).
double cross_gate_theta(const Eigen::MatrixXcd& alpha_late, const Eigen::MatrixXcd& alpha_early);

/// Keep only the listed modes.
ModeData select_modes(const ModeData& modes, const std::vector<std::size_t>& indices);

}  // namespace iongate

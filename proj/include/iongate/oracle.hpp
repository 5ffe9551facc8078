#pragma once

#include "iongate/crystal.hpp"
#include "iongate/dynamics.hpp"
#include "iongate/fidelity.hpp"

#include <Eigen/Dense>

#include <vector>

namespace iongate {

/// Two ions and at most two of their shared transverse modes.
struct OracleSystem {
  Eigen::VectorXd omega;  // rad/s
  Eigen::VectorXd eta;
  Eigen::MatrixXd b;      // (ion 0/1, mode)

  std::size_t n_modes() const { return static_cast<std::size_t>(omega.size()); }
  void validate() const;
  /// Mode data with the two ions as rows 0 and 1.
  ModeData mode_data() const;
};

OracleSystem oracle_system(const ModeData& modes, std::size_t ion_i, std::size_t ion_j,
                           const std::vector<std::size_t>& mode_indices);

struct OracleConfig {
  std::size_t fock_cutoff = 20;   // levels per mode
  double dt = 0.0;                // s; 0 picks 2 pi / (200 max(mu, omega_k))
  double delta_omega_asym = 0.0;  // relative Rabi imbalance of the two Raman pairs
  double delta_mu_asym = 0.0;     // rad/s, common shift of both Raman detunings
  double step_tolerance = 1e-8;   // allowed state change on halving the step
  int max_halvings = 4;
  double top_population_limit = 1e-6;

  void validate() const;
};

/// Two-spin by phonon state. Spin index s = 2 s_i + s_j in the computational
/// basis; phonon index is row-major over the included modes.
struct OracleState {
  Eigen::MatrixXcd psi;  // (4 * phonon dim, trajectories)
  double dt = 0.0;
  double step_change = 0.0;    // max |psi(dt) - psi(dt/2)| over trajectories
  double top_population = 0.0; // largest top-level population seen
  double norm_drift = 0.0;
  int halvings = 0;
};

/// Integrates i d psi/dt = H(t) psi from |00> times the given Fock states
/// (one column per entry of `fock`, each entry one occupation per mode).
OracleState evolve_exact(const OracleSystem& system, const PulseSequence& seq,
                         const OracleConfig& cfg, const std::vector<std::vector<std::size_t>>& fock);

/// Same integration at a fixed step without halving or cutoff checks.
OracleState evolve_fixed(const OracleSystem& system, const PulseSequence& seq,
                         const OracleConfig& cfg, const std::vector<std::vector<std::size_t>>& fock,
                         double dt);

struct OracleResult {
  double fidelity = 0.0;        // against the ideal gate image of |00>
  double top_population = 0.0;
  double step_change = 0.0;     // fidelity change on the last halving
  double weight_covered = 0.0;  // thermal weight of the included Fock terms
  std::size_t n_terms = 0;
  double dt = 0.0;
};

/// Thermal average over Boltzmann-weighted Fock states. n_terms = 0 takes
/// as many terms as needed to cover 99.99 % of the weight.
OracleResult thermal_fidelity(const OracleSystem& system, const PulseSequence& seq,
                              const OracleConfig& cfg, const ThermalSpec& thermal, int target_sign,
                              std::size_t n_terms = 0);

/// State fidelity of the analytic final density matrix for the same
/// |00> thermal input, including the carrier rotation.
double analytic_state_fidelity(const OracleSystem& system, const PulseSequence& seq,
                               const ThermalSpec& thermal, int target_sign);

/// Ideal image exp(i s pi/4 sigma sigma)|00> with the sequence spin phases.
Eigen::Vector4cd ideal_image(const PulseSequence& seq, int target_sign);

struct CarrierRotation {
  double delta_phi = 0.0;  // net single-qubit rotation angle, rad
  double infidelity_estimate = 0.0;
};

/// Net rotation of H = Omega(t) sigma_x cos(mu t) - eps Omega(t) sigma_y sin(mu t)
/// over the sequence.
CarrierRotation carrier_rotation(const PulseSequence& seq, double epsilon);

/// Smallest epsilon > 0 whose carrier rotation reaches delta_phi^2 = target.
double carrier_threshold(const PulseSequence& seq, double target = 1e-3);

struct AsymmetryPoint {
  double delta_omega = 0.0;
  double delta_mu = 0.0;
  double fidelity = 0.0;
  double top_population = 0.0;
};

struct AsymmetrySweep {
  std::vector<AsymmetryPoint> points;  // delta_omega slowest
  double baseline_infidelity = 0.0;
  double exponent_omega = 0.0;  // excess infidelity vs |delta_omega|
  double exponent_mu = 0.0;     // excess infidelity vs |delta_mu|
};

AsymmetrySweep asymmetry_sweep(const OracleSystem& system, const PulseSequence& seq,
                               const OracleConfig& cfg, const ThermalSpec& thermal, int target_sign,
                               const std::vector<double>& delta_omegas,
                               const std::vector<double>& delta_mus, unsigned threads = 1);

}  // namespace iongate

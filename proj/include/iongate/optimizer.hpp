#pragma once

#include "iongate/crystal.hpp"
#include "iongate/dynamics.hpp"
#include "iongate/fidelity.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace iongate {

struct DesignProblem {
  Eigen::MatrixXd m;      // residual-displacement quadratic form
  Eigen::MatrixXd gamma;  // two-spin angle quadratic form
  double rabi_cap = 0.0;  // rad/s; <= 0 disables the cap
  int target_sign = 1;
};

struct GateSolution {
  Eigen::VectorXd omegas;  // rad/s
  double lambda = 0.0;     // pencil eigenvalue
  double theta = 0.0;
  double objective = 0.0;  // Omega^T M Omega
  double design_infidelity = 0.0;
  double residual = 0.0;   // ||M Omega - lambda gamma Omega||
  double max_amplitude = 0.0;
  bool over_cap = false;
  int target_sign = 1;
};

/// All normalized eigen-solutions of M v = lambda gamma v whose angle has the
/// requested sign, sorted by |lambda|. Solutions above the cap are flagged.
std::vector<GateSolution> solve_pencil(const DesignProblem& problem);

struct GateDesign {
  ModeData modes;
  std::size_t ion_i = 0;
  std::size_t ion_j = 1;
  PulseSequence pulse;
  Eigen::VectorXd coth;
  double rabi_cap = 0.0;
  int target_sign = 1;
  GateSolution solution;
  FidelityReport report;
};

struct DesignRequest {
  std::size_t ion_i = 0;
  std::size_t ion_j = 1;
  std::size_t n_seg = 1;
  double tau = 0.0;  // s
  double mu = 0.0;   // rad/s
  double rabi_cap = 0.0;
  int target_sign = 0;  // 0 tries both signs
};

GateDesign design_gate(const ModeData& modes, const DesignRequest& request, const ThermalSpec& thermal);

/// Control-parameter offsets applied on top of a design.
struct Perturbation {
  double d_mu = 0.0;       // rad/s
  double rel_omega = 0.0;  // relative amplitude change, all segments
  double d_tau = 0.0;      // s, segments stretched uniformly
  double phi_m = 0.0;      // common motional phase, rad
  double d_phi_m = 0.0;    // phi_m_i - phi_m_j imbalance, rad
};

double perturbed_infidelity(const GateDesign& design, const Perturbation& p);

/// Infidelities for one (d_mu, rel_omega, d_tau) point over a list of common
/// motional phases; the pair tables are built once.
std::vector<double> phase_infidelities(const GateDesign& design, const Perturbation& base,
                                       const std::vector<double>& phases);

enum class ScanParameter { Detuning, Intensity, Duration, MotionalPhase };

std::string to_string(ScanParameter p);

struct ScanAxis {
  ScanParameter parameter = ScanParameter::Detuning;
  std::vector<double> values;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Tensor-product grid over the axes. infidelity is row-major with the first
/// axis slowest.
struct ScanResult {
  std::vector<ScanAxis> axes;
  std::vector<double> infidelity;
  double worst_case = 0.0;
};

ScanResult scan(const GateDesign& design, const std::vector<ScanAxis>& axes, unsigned threads = 1);

struct BoxSpec {
  double d_mu = 0.0;       // half-width, rad/s
  double rel_omega = 0.0;  // half-width
  double d_tau = 0.0;      // half-width, s
  std::size_t points_per_axis = 5;
  std::size_t phase_points = 16;  // 0 keeps the design phase only

  static BoxSpec requirements();  // 1 kHz, 1 %, 0.4 us
};

struct BoxReport {
  double nominal = 0.0;
  double worst_detuning = 0.0;
  double worst_intensity = 0.0;
  double worst_duration = 0.0;
  double worst_case = 0.0;   // largest single-axis excursion
  double worst_joint = 0.0;  // whole box including corners
};

BoxReport box_worst_case(const GateDesign& design, const BoxSpec& box, unsigned threads = 1);

/// Worst infidelity over detuning offsets within +-half_width and the
/// phase grid, other parameters nominal.
double detuning_axis_worst(const GateDesign& design, double half_width, std::size_t points,
                           std::size_t phase_points);

/// Mean of the two-spin angle over a uniform common motional phase.
double mean_theta_over_phase(const GateDesign& design, std::size_t n_samples = 64);

/// Amplitude factor that makes the phase-averaged angle equal the target.
double mean_rescale_factor(const GateDesign& design, std::size_t n_samples = 64);

struct WorkingPoint {
  double mu_prime = 0.0;  // rad/s
  double mean_rescale = 1.0;  // factor giving the phase-averaged target angle
  double rescale = 1.0;       // factor after the box refinement
  GateDesign design;      // detuning moved and amplitudes rescaled
  BoxReport box;
  std::vector<double> offsets;    // candidate detuning offsets, rad/s
  std::vector<double> objective;  // detuning-axis worst case per candidate
};

struct WorkingPointOptions {
  double span = 0.0;  // rad/s, candidates in [-span, span]
  double step = 0.0;  // rad/s
  BoxSpec box = BoxSpec::requirements();
  double rescale_range = 0.02;  // relative search range around mean_rescale; 0 disables
  unsigned threads = 1;
};

/// Picks the detuning offset that minimizes the detuning-axis worst case at
/// the phase-averaged amplitude, then tunes the amplitude factor to minimize
/// the box worst case at that offset.
WorkingPoint select_working_point(const GateDesign& design, const WorkingPointOptions& options);

/// Design with the detuning moved by d_mu and amplitudes scaled by factor.
GateDesign shifted_design(const GateDesign& design, double d_mu, double factor);

}  // namespace iongate

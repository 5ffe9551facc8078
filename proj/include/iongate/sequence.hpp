#pragma once

#include "iongate/dynamics.hpp"
#include "iongate/fit.hpp"
#include "iongate/optimizer.hpp"

#include <cstdint>
#include <vector>

namespace iongate {

struct PhaseStatistics {
  std::vector<double> phases;               // common motional phase, rad
  std::vector<double> theta;                // two-spin angle
  std::vector<double> residual_infidelity;  // from residual coupling alone
  double theta_mean = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double residual_max = 0.0;
};

/// Angle and residual-coupling infidelity on a uniform phi_m grid over [0, 2 pi).
PhaseStatistics phase_statistics(const GateDesign& design, std::size_t n_samples = 64);

/// Design with amplitudes scaled so the phase-averaged angle hits the target.
GateDesign mean_rescaled(const GateDesign& design, std::size_t n_samples = 64);

struct RepeatPlan {
  std::size_t m_max = 20;
  bool contiguous = true;
  std::vector<double> starts;  // explicit start times, s; overrides both modes
  std::uint64_t seed = 0;
  std::size_t draws = 16;       // random-start ensemble size
  double max_gap = 0.0;         // s; random idle time between gates, 0 means tau

  void validate() const;
};

/// Start times of the first m gates of draw `draw`.
std::vector<double> plan_starts(const RepeatPlan& plan, double tau, std::size_t m, std::size_t draw);

/// Channel infidelity of accumulated coefficients against exp(i s m pi/4 sigma sigma).
double repeat_gate_infidelity(const MagnusCoefficients& total, const Eigen::VectorXd& coth, int target_sign,
                              std::size_t m);

struct RepeatPoint {
  std::size_t m = 0;
  double infidelity = 0.0;  // ensemble mean
  double infidelity_min = 0.0;
  double infidelity_max = 0.0;
  double max_cross_theta = 0.0;  // largest single cross-gate angle term
};

struct RepeatResult {
  std::vector<RepeatPoint> points;
  PowerFit fit;                 // infidelity vs m
  double exponent_ci_low = 0.0;   // 95 % interval on the exponent
  double exponent_ci_high = 0.0;
};

RepeatResult repeat_infidelity(const GateDesign& design, const RepeatPlan& plan, unsigned threads = 1);

}  // namespace iongate

#include "iongate/sequence.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iongate {

PhaseStatistics phase_statistics(const GateDesign& design, std::size_t n_samples) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one phase sample");
  const PairModel model(design.modes, design.ion_i, design.ion_j, design.pulse.mu, design.pulse.segments());
  const double target = design.target_sign * constants::pi / 4.0;
  PhaseStatistics st;
  st.theta_min = std::numeric_limits<double>::infinity();
  st.theta_max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double phi = constants::two_pi * static_cast<double>(k) / static_cast<double>(n_samples);
    const MagnusCoefficients c =
        model.coefficients(design.pulse.omegas, design.pulse.phi_m_i + phi, design.pulse.phi_m_j + phi);
    // residual coupling alone: evaluate with the angle on target
    const double res = 1.0 - avg_fidelity_exact(gamma_factors(c, design.coth), target, design.target_sign);
    st.phases.push_back(phi);
    st.theta.push_back(c.theta);
    st.residual_infidelity.push_back(res);
    sum += c.theta;
    st.theta_min = std::min(st.theta_min, c.theta);
    st.theta_max = std::max(st.theta_max, c.theta);
    st.residual_max = std::max(st.residual_max, res);
  }
  st.theta_mean = sum / static_cast<double>(n_samples);
  return st;
}

GateDesign mean_rescaled(const GateDesign& design, std::size_t n_samples) {
  return shifted_design(design, 0.0, mean_rescale_factor(design, n_samples));
}

void RepeatPlan::validate() const {
  if (m_max < 1) throw Error(ErrorKind::InvalidCount, "repeat plan needs at least one gate");
  if (!starts.empty() && starts.size() < m_max) {
    throw Error(ErrorKind::InvalidCount, "explicit start list is shorter than the gate count");
  }
  if (!contiguous && starts.empty() && draws < 1) {
    throw Error(ErrorKind::InvalidCount, "random starts need at least one draw");
  }
  if (!(std::isfinite(max_gap) && max_gap >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "maximum gap must be finite and non-negative");
  }
}

std::vector<double> plan_starts(const RepeatPlan& plan, double tau, std::size_t m, std::size_t draw) {
  if (!plan.starts.empty()) return {plan.starts.begin(), plan.starts.begin() + static_cast<std::ptrdiff_t>(m)};
  std::vector<double> starts(m);
  if (plan.contiguous) {
    for (std::size_t g = 0; g < m; ++g) starts[g] = static_cast<double>(g) * tau;
    return starts;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(plan.seed), static_cast<std::uint32_t>(plan.seed >> 32),
                    static_cast<std::uint32_t>(draw)};
  std::mt19937_64 rng(seq);
  const double gap = plan.max_gap > 0.0 ? plan.max_gap : tau;
  // 53-bit uniform in [0, 1), independent of the library's distributions
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  double t = gap * uniform();
  for (std::size_t g = 0; g < m; ++g) {
    starts[g] = t;
    t += tau + gap * uniform();
  }
  return starts;
}

double repeat_gate_infidelity(const MagnusCoefficients& total, const Eigen::VectorXd& coth, int target_sign,
                              std::size_t m) {
  const double s = target_sign >= 0 ? 1.0 : -1.0;
  const Eigen::Matrix4cd ideal = ideal_xx_pm(s * static_cast<double>(m) * constants::pi / 4.0);
  const Channel channel = [&](const Eigen::Matrix4cd& rho) { return final_density_matrix(rho, total, coth); };
  return 1.0 - avg_fidelity_from_channel(channel, ideal);
}

RepeatResult repeat_infidelity(const GateDesign& design, const RepeatPlan& plan, unsigned threads) {
  plan.validate();
  const std::size_t m_max = plan.m_max;
  const bool random = plan.starts.empty() && !plan.contiguous;
  const std::size_t draws = random ? plan.draws : 1;
  const PulseSequence& p = design.pulse;

  // per draw, per m: infidelity and largest cross-gate term
  std::vector<std::vector<double>> inf(draws, std::vector<double>(m_max));
  std::vector<std::vector<double>> cross(draws, std::vector<double>(m_max));
  parallel_for(draws, threads, [&](std::size_t d) {
    const std::vector<double> starts = plan_starts(plan, p.tau, m_max, d);
    GateSchedule check;
    check.pulse = p;
    check.starts = starts;
    check.validate();
    MagnusCoefficients total;
    total.alpha = Eigen::MatrixXcd::Zero(2, static_cast<Eigen::Index>(design.modes.n_modes()));
    total.lambda = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(design.modes.n_modes()));
    std::vector<Eigen::MatrixXcd> alphas;
    double worst_cross = 0.0;
    for (std::size_t g = 0; g < m_max; ++g) {
      const PairModel model(design.modes, design.ion_i, design.ion_j, p.mu, p.segments(starts[g]));
      const MagnusCoefficients c = model.coefficients(p.omegas, p.phi_m_i, p.phi_m_j);
      for (const Eigen::MatrixXcd& earlier : alphas) {
        worst_cross = std::max(worst_cross, std::abs(cross_gate_theta(c.alpha, earlier)));
      }
      total.theta += c.theta + cross_gate_theta(c.alpha, total.alpha);
      total.alpha += c.alpha;
      total.lambda += c.lambda;
      total.carrier_angle += c.carrier_angle;
      alphas.push_back(c.alpha);
      inf[d][g] = repeat_gate_infidelity(total, design.coth, design.target_sign, g + 1);
      cross[d][g] = worst_cross;
    }
  });

  RepeatResult r;
  std::vector<double> ms, ys;
  for (std::size_t g = 0; g < m_max; ++g) {
    RepeatPoint pt;
    pt.m = g + 1;
    std::vector<double> vals;
    pt.infidelity_min = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < draws; ++d) {
      vals.push_back(inf[d][g]);
      pt.infidelity_min = std::min(pt.infidelity_min, inf[d][g]);
      pt.infidelity_max = std::max(pt.infidelity_max, inf[d][g]);
      pt.max_cross_theta = std::max(pt.max_cross_theta, cross[d][g]);
    }
    pt.infidelity = compensated_sum(vals) / static_cast<double>(draws);
    r.points.push_back(pt);
    ms.push_back(static_cast<double>(pt.m));
    ys.push_back(pt.infidelity);
  }
  if (m_max >= 2) {
    r.fit = fit_power_law(ms, ys);
    r.exponent_ci_low = r.fit.exponent - 1.96 * r.fit.exponent_stderr;
    r.exponent_ci_high = r.fit.exponent + 1.96 * r.fit.exponent_stderr;
  }
  return r;
}

}  // namespace iongate

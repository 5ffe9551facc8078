#include "iongate/optimizer.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "iongate/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iongate {

namespace {

constexpr double kQuarterPi = constants::pi / 4.0;

PairModel model_for(const GateDesign& d, double d_mu, double d_tau) {
  return PairModel(d.modes, d.ion_i, d.ion_j, d.pulse.mu + d_mu,
                   uniform_segments(d.pulse.tau + d_tau, d.pulse.n_seg));
}

std::vector<double> phase_grid(std::size_t n) {
  if (n == 0) return {0.0};
  std::vector<double> phases(n);
  for (std::size_t k = 0; k < n; ++k) {
    phases[k] = constants::two_pi * static_cast<double>(k) / static_cast<double>(n);
  }
  return phases;
}

double infidelity_at(const PairModel& model, const GateDesign& d, const Eigen::VectorXd& omegas,
                     double phi_i, double phi_j) {
  const MagnusCoefficients c = model.coefficients(omegas, phi_i, phi_j);
  return 1.0 - avg_fidelity_exact(c, d.coth, d.target_sign);
}

}  // namespace

std::vector<GateSolution> solve_pencil(const DesignProblem& problem) {
  const Eigen::Index n = problem.m.rows();
  if (n < 1 || problem.m.cols() != n || problem.gamma.rows() != n || problem.gamma.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "pencil matrices must be square and of equal size");
  }
  if (!problem.m.allFinite() || !problem.gamma.allFinite()) {
    throw Error(ErrorKind::IllConditionedPencil, "pencil matrices contain non-finite entries");
  }
  const int sign = problem.target_sign >= 0 ? 1 : -1;
  const Eigen::MatrixXd m = 0.5 * (problem.m + problem.m.transpose());
  const Eigen::MatrixXd g = 0.5 * (problem.gamma + problem.gamma.transpose());
  const double m_norm = std::max(m.norm(), std::numeric_limits<double>::min());
  const double g_norm = g.norm();
  if (g_norm == 0.0) throw Error(ErrorKind::NoFeasibleSolution, "two-spin angle form vanishes identically");

  // Split M into its range R and null space N. Null directions close every
  // loop at zero cost; on the range the pencil reduces to a Schur complement
  // with a positive definite right side.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> m_eig(m);
  if (m_eig.info() != Eigen::Success) throw Error(ErrorKind::IllConditionedPencil, "eigendecomposition of M failed");
  const double m_max = std::max(m_eig.eigenvalues().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  std::vector<Eigen::Index> range_idx, null_idx;
  for (Eigen::Index k = 0; k < n; ++k) {
    (m_eig.eigenvalues()[k] > 1e-13 * m_max ? range_idx : null_idx).push_back(k);
  }
  const auto nr = static_cast<Eigen::Index>(range_idx.size());
  const auto nn = static_cast<Eigen::Index>(null_idx.size());
  Eigen::MatrixXd r_basis(n, nr), n_basis(n, nn);
  Eigen::VectorXd r_vals(nr);
  for (Eigen::Index k = 0; k < nr; ++k) {
    r_basis.col(k) = m_eig.eigenvectors().col(range_idx[static_cast<std::size_t>(k)]);
    r_vals[k] = m_eig.eigenvalues()[range_idx[static_cast<std::size_t>(k)]];
  }
  for (Eigen::Index k = 0; k < nn; ++k) n_basis.col(k) = m_eig.eigenvectors().col(null_idx[static_cast<std::size_t>(k)]);

  std::vector<Eigen::VectorXd> candidates;
  Eigen::MatrixXd g_nn_pinv = Eigen::MatrixXd::Zero(nn, nn);
  if (nn > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> g_eig(n_basis.transpose() * g * n_basis);
    for (Eigen::Index k = 0; k < nn; ++k) {
      const double d = g_eig.eigenvalues()[k];
      if (std::abs(d) <= 1e-14 * g_norm) continue;
      const Eigen::VectorXd p = g_eig.eigenvectors().col(k);
      g_nn_pinv += p * p.transpose() / d;
      candidates.push_back(n_basis * p);
    }
  }
  if (nr > 0) {
    const Eigen::MatrixXd g_nr = n_basis.transpose() * g * r_basis;
    const Eigen::MatrixXd schur = r_basis.transpose() * g * r_basis - g_nr.transpose() * g_nn_pinv * g_nr;
    const Eigen::VectorXd inv_sqrt = r_vals.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd c = inv_sqrt.asDiagonal() * schur * inv_sqrt.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> c_eig(0.5 * (c + c.transpose()));
    if (c_eig.info() != Eigen::Success) throw Error(ErrorKind::IllConditionedPencil, "reduced pencil failed");
    for (Eigen::Index k = 0; k < nr; ++k) {
      const Eigen::VectorXd a = inv_sqrt.asDiagonal() * c_eig.eigenvectors().col(k);
      candidates.push_back(r_basis * a - n_basis * (g_nn_pinv * (g_nr * a)));
    }
  }

  std::vector<GateSolution> out;
  for (Eigen::VectorXd v : candidates) {
    const double vgv = v.dot(g * v);
    if (!std::isfinite(vgv) || std::abs(vgv) < 1e-14 * g_norm * v.squaredNorm()) continue;
    if ((vgv > 0.0 ? 1 : -1) != sign) continue;
    v *= std::sqrt(kQuarterPi / std::abs(vgv));
    v *= std::sqrt(kQuarterPi / std::abs(v.dot(g * v)));
    // deterministic overall sign: first non-negligible entry positive
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v[i]) > 1e-9 * v.cwiseAbs().maxCoeff()) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
    GateSolution s;
    s.omegas = v;
    s.theta = v.dot(g * v);
    s.objective = v.dot(m * v);
    s.lambda = std::abs(s.objective) <= 1e-13 * m_max * v.squaredNorm() ? 0.0 : s.objective / s.theta;
    s.residual = (m * v - s.lambda * (g * v)).norm();
    s.design_infidelity = 0.8 * s.objective;
    s.max_amplitude = v.cwiseAbs().maxCoeff();
    s.over_cap = problem.rabi_cap > 0.0 && s.max_amplitude > problem.rabi_cap;
    s.target_sign = sign;
    if (s.residual > 1e-8 * m_norm * v.norm() + 1e-10 * g_norm * v.norm() * std::abs(s.lambda)) continue;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const GateSolution& a, const GateSolution& b) {
    if (std::abs(a.lambda) != std::abs(b.lambda)) return std::abs(a.lambda) < std::abs(b.lambda);
    return a.max_amplitude < b.max_amplitude;
  });
  if (std::none_of(out.begin(), out.end(), [](const GateSolution& s) { return !s.over_cap; })) {
    throw Error(ErrorKind::NoFeasibleSolution,
                out.empty() ? "no eigen-solution with the requested angle sign"
                            : "every eigen-solution exceeds the amplitude cap");
  }
  return out;
}

GateDesign design_gate(const ModeData& modes, const DesignRequest& request, const ThermalSpec& thermal) {
  if (!(request.tau > 0.0) || request.n_seg < 1 || !(request.mu > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "design needs tau > 0, n_seg >= 1 and mu > 0");
  }
  const Eigen::VectorXd coth = thermal.coth(modes);
  const PairModel model(modes, request.ion_i, request.ion_j, request.mu,
                        uniform_segments(request.tau, request.n_seg));
  DesignProblem problem;
  problem.m = model.residual_matrix(coth, 0.0, 0.0);
  problem.gamma = model.gamma(0.0, 0.0);
  problem.rabi_cap = request.rabi_cap;

  std::vector<int> signs;
  if (request.target_sign == 0) {
    signs = {1, -1};
  } else {
    signs = {request.target_sign > 0 ? 1 : -1};
  }

  GateDesign best;
  bool found = false;
  std::string last_error;
  for (int sign : signs) {
    problem.target_sign = sign;
    std::vector<GateSolution> sols;
    try {
      sols = solve_pencil(problem);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoFeasibleSolution) throw;
      last_error = e.what();
      continue;
    }
    const auto it = std::find_if(sols.begin(), sols.end(), [](const GateSolution& s) { return !s.over_cap; });
    GateSolution sol = *it;
    const FidelityReport report = fidelity_report(sol.omegas, model, coth, sign);
    sol.design_infidelity = 1.0 - report.f_exact;
    if (!found || sol.design_infidelity < best.solution.design_infidelity) {
      best.solution = sol;
      best.report = report;
      best.target_sign = sign;
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::NoFeasibleSolution, last_error);

  best.modes = modes;
  best.ion_i = request.ion_i;
  best.ion_j = request.ion_j;
  best.coth = coth;
  best.rabi_cap = request.rabi_cap;
  best.pulse.n_seg = request.n_seg;
  best.pulse.tau = request.tau;
  best.pulse.mu = request.mu;
  best.pulse.omegas = best.solution.omegas;
  return best;
}

double perturbed_infidelity(const GateDesign& design, const Perturbation& p) {
  return phase_infidelities(design, p, {p.phi_m}).front();
}

std::vector<double> phase_infidelities(const GateDesign& design, const Perturbation& base,
                                       const std::vector<double>& phases) {
  const PairModel model = model_for(design, base.d_mu, base.d_tau);
  const Eigen::VectorXd omegas = design.pulse.omegas * (1.0 + base.rel_omega);
  std::vector<double> out;
  out.reserve(phases.size());
  for (double phi : phases) {
    const double pi_ = design.pulse.phi_m_i + phi + 0.5 * base.d_phi_m;
    const double pj = design.pulse.phi_m_j + phi - 0.5 * base.d_phi_m;
    out.push_back(infidelity_at(model, design, omegas, pi_, pj));
  }
  return out;
}

std::string to_string(ScanParameter p) {
  switch (p) {
    case ScanParameter::Detuning: return "d_mu_rad_s";
    case ScanParameter::Intensity: return "rel_omega";
    case ScanParameter::Duration: return "d_tau_s";
    case ScanParameter::MotionalPhase: return "phi_m_rad";
  }
  return "unknown";
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return v;
}

ScanResult scan(const GateDesign& design, const std::vector<ScanAxis>& axes, unsigned threads) {
  ScanResult r;
  r.axes = axes;
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) throw Error(ErrorKind::InvalidArgument, "scan axis " + to_string(a.parameter) + " is empty");
    if (!std::is_sorted(a.values.begin(), a.values.end())) {
      throw Error(ErrorKind::InvalidArgument, "scan axis " + to_string(a.parameter) + " is not monotone");
    }
    total *= a.values.size();
  }
  r.infidelity.assign(total, 0.0);
  parallel_for(total, threads, [&](std::size_t flat) {
    Perturbation p;
    std::size_t rem = flat;
    for (std::size_t ax = axes.size(); ax-- > 0;) {
      const auto& a = axes[ax];
      const double v = a.values[rem % a.values.size()];
      rem /= a.values.size();
      switch (a.parameter) {
        case ScanParameter::Detuning: p.d_mu = v; break;
        case ScanParameter::Intensity: p.rel_omega = v; break;
        case ScanParameter::Duration: p.d_tau = v; break;
        case ScanParameter::MotionalPhase: p.phi_m = v; break;
      }
    }
    r.infidelity[flat] = perturbed_infidelity(design, p);
  });
  r.worst_case = *std::max_element(r.infidelity.begin(), r.infidelity.end());
  return r;
}

BoxSpec BoxSpec::requirements() {
  BoxSpec b;
  b.d_mu = constants::two_pi * 1e3;
  b.rel_omega = 0.01;
  b.d_tau = 0.4e-6;
  return b;
}

BoxReport box_worst_case(const GateDesign& design, const BoxSpec& box, unsigned threads) {
  const std::size_t n = std::max<std::size_t>(box.points_per_axis, 1);
  const std::vector<double> mus = linspace(-box.d_mu, box.d_mu, n);
  const std::vector<double> rels = linspace(-box.rel_omega, box.rel_omega, n);
  const std::vector<double> taus = linspace(-box.d_tau, box.d_tau, n);
  const std::vector<double> phases = phase_grid(box.phase_points);

  // worst over phases for every (mu, tau) pair and intensity
  const std::size_t n_models = n * n;
  std::vector<double> worst(n_models * n, 0.0);
  parallel_for(n_models, threads, [&](std::size_t idx) {
    const std::size_t im = idx / n;
    const std::size_t it = idx % n;
    const PairModel model = model_for(design, mus[im], taus[it]);
    for (std::size_t ir = 0; ir < n; ++ir) {
      const Eigen::VectorXd omegas = design.pulse.omegas * (1.0 + rels[ir]);
      double w = 0.0;
      for (double phi : phases) {
        w = std::max(w, infidelity_at(model, design, omegas, design.pulse.phi_m_i + phi,
                                      design.pulse.phi_m_j + phi));
      }
      worst[idx * n + ir] = w;
    }
  });

  const std::size_t mid = n / 2;
  auto at = [&](std::size_t im, std::size_t it, std::size_t ir) { return worst[(im * n + it) * n + ir]; };
  BoxReport rep;
  rep.nominal = 1.0 - avg_fidelity_exact(
                          PairModel(design.modes, design.ion_i, design.ion_j, design.pulse.mu,
                                    design.pulse.segments())
                              .coefficients(design.pulse.omegas, design.pulse.phi_m_i, design.pulse.phi_m_j),
                          design.coth, design.target_sign);
  for (std::size_t k = 0; k < n; ++k) {
    rep.worst_detuning = std::max(rep.worst_detuning, at(k, mid, mid));
    rep.worst_duration = std::max(rep.worst_duration, at(mid, k, mid));
    rep.worst_intensity = std::max(rep.worst_intensity, at(mid, mid, k));
  }
  rep.worst_case = std::max({rep.worst_detuning, rep.worst_duration, rep.worst_intensity});
  rep.worst_joint = *std::max_element(worst.begin(), worst.end());
  return rep;
}

double mean_theta_over_phase(const GateDesign& design, std::size_t n_samples) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one phase sample");
  const PairModel model(design.modes, design.ion_i, design.ion_j, design.pulse.mu, design.pulse.segments());
  double sum = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double phi = constants::two_pi * static_cast<double>(k) / static_cast<double>(n_samples);
    sum += model.theta(design.pulse.omegas, design.pulse.phi_m_i + phi, design.pulse.phi_m_j + phi);
  }
  return sum / static_cast<double>(n_samples);
}

double mean_rescale_factor(const GateDesign& design, std::size_t n_samples) {
  const double mean = mean_theta_over_phase(design, n_samples);
  const double target = design.target_sign * kQuarterPi;
  if (!(mean / target > 0.0)) {
    throw Error(ErrorKind::NoFeasibleSolution, "phase-averaged angle has the wrong sign for rescaling");
  }
  return std::sqrt(target / mean);
}

GateDesign shifted_design(const GateDesign& design, double d_mu, double factor) {
  GateDesign d = design;
  d.pulse.mu += d_mu;
  d.pulse.omegas *= factor;
  d.solution.omegas = d.pulse.omegas;
  d.solution.max_amplitude = d.pulse.omegas.cwiseAbs().maxCoeff();
  d.solution.over_cap = d.rabi_cap > 0.0 && d.solution.max_amplitude > d.rabi_cap;
  const PairModel model(d.modes, d.ion_i, d.ion_j, d.pulse.mu, d.pulse.segments());
  d.report = fidelity_report(d.pulse.omegas, model, d.coth, d.target_sign, d.pulse.phi_m_i, d.pulse.phi_m_j);
  d.solution.theta = d.report.theta;
  d.solution.design_infidelity = 1.0 - d.report.f_exact;
  return d;
}

double detuning_axis_worst(const GateDesign& design, double half_width, std::size_t points,
                           std::size_t phase_points) {
  const std::vector<double> phases = phase_grid(phase_points);
  double worst = 0.0;
  for (double d_mu : linspace(-half_width, half_width, std::max<std::size_t>(points, 1))) {
    Perturbation p;
    p.d_mu = d_mu;
    for (double v : phase_infidelities(design, p, phases)) worst = std::max(worst, v);
  }
  return worst;
}

namespace {

double box_objective(const GateDesign& design, double offset, double factor, const WorkingPointOptions& o) {
  return box_worst_case(shifted_design(design, offset, factor), o.box, o.threads).worst_case;
}

// Coarse grid over f0 (1 +- range) followed by golden-section refinement
// around the best grid point. f0 is kept unless the box improves visibly.
double refine_rescale(const GateDesign& design, double offset, double f0, const WorkingPointOptions& o) {
  if (!(o.rescale_range > 0.0)) return f0;
  constexpr int kHalf = 8;
  const double h = f0 * o.rescale_range / kHalf;
  const double base = box_objective(design, offset, f0, o);
  double best_f = f0, best = base;
  for (int k = -kHalf; k <= kHalf; ++k) {
    if (k == 0) continue;
    const double f = f0 + k * h;
    const double v = box_objective(design, offset, f, o);
    if (v < best) {
      best = v;
      best_f = f;
    }
  }
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::max(best_f - h, f0 - kHalf * h), b = std::min(best_f + h, f0 + kHalf * h);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = box_objective(design, offset, c, o), fd = box_objective(design, offset, d, o);
  while (b - a > 1e-6 * f0) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = box_objective(design, offset, c, o);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = box_objective(design, offset, d, o);
    }
  }
  const double f_mid = fc < fd ? c : d;
  const double v_mid = std::min(fc, fd);
  if (v_mid < best) {
    best = v_mid;
    best_f = f_mid;
  }
  return best < base * (1.0 - 1e-6) - 1e-15 ? best_f : f0;
}

}  // namespace

WorkingPoint select_working_point(const GateDesign& design, const WorkingPointOptions& options) {
  WorkingPoint wp;
  const std::size_t half =
      options.step > 0.0 ? static_cast<std::size_t>(std::floor(options.span / options.step + 1e-9)) : 0;
  for (std::size_t k = 0; k <= 2 * half; ++k) {
    wp.offsets.push_back((static_cast<double>(k) - static_cast<double>(half)) * options.step);
  }
  wp.objective.assign(wp.offsets.size(), 0.0);
  std::vector<double> factors(wp.offsets.size(), 1.0);
  parallel_for(wp.offsets.size(), options.threads, [&](std::size_t k) {
    factors[k] = mean_rescale_factor(shifted_design(design, wp.offsets[k], 1.0));
    const GateDesign d = shifted_design(design, wp.offsets[k], factors[k]);
    wp.objective[k] = detuning_axis_worst(d, options.box.d_mu, options.box.points_per_axis,
                                          options.box.phase_points);
  });
  // ties resolve toward the smallest offset
  std::size_t best = half;
  for (std::size_t k = 0; k < wp.offsets.size(); ++k) {
    const bool better = wp.objective[k] < wp.objective[best] - 1e-15;
    const bool tie_closer = std::abs(wp.objective[k] - wp.objective[best]) <= 1e-15 &&
                            std::abs(wp.offsets[k]) < std::abs(wp.offsets[best]);
    if (better || tie_closer) best = k;
  }
  wp.mu_prime = design.pulse.mu + wp.offsets[best];
  wp.mean_rescale = factors[best];
  wp.rescale = refine_rescale(design, wp.offsets[best], factors[best], options);
  wp.design = shifted_design(design, wp.offsets[best], wp.rescale);
  wp.box = box_worst_case(wp.design, options.box, options.threads);
  return wp;
}

}  // namespace iongate

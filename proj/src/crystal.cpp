#include "iongate/crystal.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace iongate {

namespace {

constexpr int kMaxNewtonIterations = 200;
constexpr double kGradientTolerance = 1e-12;
constexpr double kAcceptGradient = 1e-10;

bool strictly_increasing(const Eigen::VectorXd& u) {
  for (Eigen::Index i = 1; i < u.size(); ++i) {
    if (!(u[i] > u[i - 1])) return false;
  }
  return true;
}

Eigen::VectorXd default_seed(const AxialModel& model, std::size_t n) {
  const auto count = static_cast<Eigen::Index>(n);
  Eigen::VectorXd u(count);
  double span = 0.0;
  if (model.c2 < 0.0 && model.c4 > 0.0) {
    span = 1.0 / std::sqrt(model.c4);  // single-ion minimum of -u^2/2 + c4 u^4/4
  } else {
    span = 0.5 * static_cast<double>(n - 1) * 2.0 / std::pow(static_cast<double>(n), 0.56);
  }
  if (n == 1) {
    u[0] = span;
    return u;
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    u[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  // outward jitter keeps the reflection symmetry of the seed
  for (Eigen::Index i = 0; i < count; ++i) {
    if (u[i] > 0.0) u[i] += 1e-6;
    if (u[i] < 0.0) u[i] -= 1e-6;
  }
  return u;
}

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& grad) {
  const double scale = std::max(1.0, hessian.diagonal().cwiseAbs().maxCoeff());
  double shift = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::MatrixXd shifted = hessian;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      return -llt.solve(grad);
    }
    shift = shift == 0.0 ? 1e-8 * scale : 4.0 * shift;
  }
  return -grad;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void TrapSpec::validate() const {
  if (n_ions < 1) throw Error(ErrorKind::InvalidCount, "n_ions must be at least 1");
  if (!(omega_x > 0.0) || !(omega_y > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "transverse trap frequencies must be positive");
  }
  if (!(mass_kg > 0.0) || !(charge_c > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "mass and charge must be positive");
  }
  if (const auto* q = std::get_if<QuarticAxial>(&axial)) {
    if (!(q->l0_m > 0.0) || !(q->gamma4 > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "quartic axial potential needs l0 > 0 and gamma4 > 0");
    }
  } else if (const auto* h = std::get_if<HarmonicAxial>(&axial)) {
    if (!(h->omega_z > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "harmonic axial potential needs omega_z > 0");
    }
  }
}

std::optional<double> TrapSpec::mathieu_q() const {
  if (q_param) return q_param;
  if (omega_rf && *omega_rf > 0.0) return 2.0 * std::sqrt(2.0) * omega_x / *omega_rf;
  return std::nullopt;
}

double TrapSpec::length_unit() const {
  if (const auto* q = std::get_if<QuarticAxial>(&axial)) return q->l0_m;
  const auto& h = std::get<HarmonicAxial>(axial);
  return std::cbrt(constants::coulomb_constant(charge_c) / (mass_kg * h.omega_z * h.omega_z));
}

IonWindow default_window(std::size_t n_ions) {
  if (n_ions >= 4) return {1, n_ions - 1};
  return {0, n_ions};
}

AxialModel AxialModel::from(const AxialPotential& axial) {
  if (const auto* q = std::get_if<QuarticAxial>(&axial)) return {-1.0, q->gamma4};
  return {1.0, 0.0};
}

double AxialModel::energy(const Eigen::VectorXd& u) const {
  double v = 0.0;
  const Eigen::Index n = u.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u2 = u[i] * u[i];
    v += 0.5 * c2 * u2 + 0.25 * c4 * u2 * u2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::abs(u[i] - u[j]);
      if (d == 0.0) return std::numeric_limits<double>::infinity();
      v += 1.0 / d;
    }
  }
  return v;
}

Eigen::VectorXd AxialModel::gradient(const Eigen::VectorXd& u) const {
  const Eigen::Index n = u.size();
  Eigen::VectorXd g(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double s = c2 * u[m] + c4 * u[m] * u[m] * u[m];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == m) continue;
      const double d = u[m] - u[j];
      s -= d / std::abs(d * d * d);
    }
    g[m] = s;
  }
  return g;
}

Eigen::MatrixXd AxialModel::hessian(const Eigen::VectorXd& u) const {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double diag = c2 + 3.0 * c4 * u[m] * u[m];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == m) continue;
      const double d = std::abs(u[m] - u[j]);
      const double c = 2.0 / (d * d * d);
      diag += c;
      h(m, j) = -c;
    }
    h(m, m) = diag;
  }
  return h;
}

SpacingStats spacing_stats(const Crystal& crystal, IonWindow window) {
  if (window.end > crystal.size() || window.size() < 2) {
    throw Error(ErrorKind::EmptyWindow, "spacing window must contain at least two ions inside the chain");
  }
  std::vector<double> gaps;
  gaps.reserve(window.size() - 1);
  for (std::size_t i = window.begin + 1; i < window.end; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    gaps.push_back(crystal.positions[k] - crystal.positions[k - 1]);
  }
  const double mean = mean_of(gaps);
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var /= static_cast<double>(gaps.size());
  return {mean, std::sqrt(var) / mean};
}

Crystal solve_equilibrium(const TrapSpec& spec, const std::optional<Eigen::VectorXd>& initial_guess,
                          std::optional<IonWindow> window) {
  spec.validate();
  const AxialModel model = AxialModel::from(spec.axial);
  Eigen::VectorXd u = initial_guess ? *initial_guess : default_seed(model, spec.n_ions);
  if (static_cast<std::size_t>(u.size()) != spec.n_ions) {
    throw Error(ErrorKind::InvalidArgument, "initial guess length does not match n_ions");
  }
  std::sort(u.data(), u.data() + u.size());

  double energy = model.energy(u);
  Eigen::VectorXd grad = model.gradient(u);
  int iter = 0;
  for (; iter < kMaxNewtonIterations; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < kGradientTolerance) break;
    const Eigen::VectorXd dir = newton_direction(model.hessian(u), grad);
    const double slope = grad.dot(dir);
    const bool local = grad.cwiseAbs().maxCoeff() < 1e-6;
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const Eigen::VectorXd trial = u + step * dir;
      if (!strictly_increasing(trial)) continue;
      const double e = model.energy(trial);
      if (local || e <= energy + 1e-4 * step * slope) {
        u = trial;
        energy = e;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    grad = model.gradient(u);
  }

  const double gnorm = grad.cwiseAbs().maxCoeff();
  if (!(gnorm < kAcceptGradient)) {
    throw Error(ErrorKind::NonConvergence,
                "equilibrium gradient " + std::to_string(gnorm) + " after " + std::to_string(iter) +
                    " Newton iterations");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(model.hessian(u));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::UnstableConfiguration, "axial Hessian is not positive definite");
  }

  Crystal crystal;
  crystal.u = u;
  crystal.positions = u * spec.length_unit();
  crystal.gradient_norm = gnorm;
  crystal.iterations = iter;
  crystal.window = window.value_or(default_window(spec.n_ions));
  if (crystal.window.size() >= 2 && crystal.window.end <= spec.n_ions) {
    const SpacingStats stats = spacing_stats(crystal, crystal.window);
    crystal.spacing_mean = stats.mean;
    crystal.spacing_rsd = stats.rsd;
  }
  return crystal;
}

Gamma4Optimum optimize_gamma4(const TrapSpec& spec, double lo, double hi,
                              std::optional<IonWindow> window, double tolerance) {
  if (!(lo > 0.0) || !(hi > lo)) {
    throw Error(ErrorKind::InvalidArgument, "gamma4 search interval must be positive and non-empty");
  }
  const auto* quartic = std::get_if<QuarticAxial>(&spec.axial);
  if (quartic == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "gamma4 search needs a quartic axial potential");
  }
  const IonWindow win = window.value_or(default_window(spec.n_ions));

  auto rsd_at = [&](double gamma4) {
    TrapSpec s = spec;
    s.axial = QuarticAxial{quartic->l0_m, gamma4};
    return spacing_stats(solve_equilibrium(s, std::nullopt, win), win).rsd;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = rsd_at(x1);
  double f2 = rsd_at(x2);

  const double fa = rsd_at(a);
  const double fb = rsd_at(b);
  if (std::max({fa, fb, f1, f2}) < 1e-12) {
    return {0.5 * (lo + hi), 0.0, true};
  }

  int iter = 0;
  while (b - a > tolerance) {
    if (++iter > 200) throw Error(ErrorKind::NonConvergence, "golden-section search did not converge");
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = rsd_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = rsd_at(x2);
    }
  }
  const double g = 0.5 * (a + b);
  return {g, rsd_at(g), false};
}

HarmonicAxial harmonic_matching_spacing(const TrapSpec& spec, IonWindow window, double target_mean) {
  if (!(target_mean > 0.0)) throw Error(ErrorKind::InvalidArgument, "target spacing must be positive");
  TrapSpec unit = spec;
  // any omega_z works for the dimensionless shape; rescale afterwards
  unit.axial = HarmonicAxial{1.0};
  const Crystal c = solve_equilibrium(unit, std::nullopt, window);
  const SpacingStats dimless = spacing_stats(
      Crystal{c.u, c.u, window, 0.0, 0.0, 0.0, 0}, window);
  const double length = target_mean / dimless.mean;
  const double k = constants::coulomb_constant(spec.charge_c);
  return HarmonicAxial{std::sqrt(k / (spec.mass_kg * length * length * length))};
}

Eigen::MatrixXd transverse_hessian(const TrapSpec& spec, const Crystal& crystal) {
  const Eigen::Index n = crystal.positions.size();
  const double k_over_m = constants::coulomb_constant(spec.charge_c) / spec.mass_kg;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double diag = spec.omega_x * spec.omega_x;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == m) continue;
      const double d = std::abs(crystal.positions[m] - crystal.positions[j]);
      const double c = k_over_m / (d * d * d);
      diag -= c;
      h(m, j) = c;
    }
    h(m, m) = diag;
  }
  return h;
}

ModeData transverse_modes(const TrapSpec& spec, const Crystal& crystal, double delta_k) {
  const Eigen::MatrixXd h = transverse_hessian(spec, crystal);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::ZigzagInstability, "transverse eigendecomposition failed");
  }
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::Index n = evals.size();
  const double max_eval = evals.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(evals[k] > 1e-12 * max_eval)) {
      throw Error(ErrorKind::ZigzagInstability,
                  "transverse mode " + std::to_string(k) + " has non-positive curvature");
    }
  }

  ModeData modes;
  modes.delta_k = delta_k;
  modes.omega.resize(n);
  modes.eta.resize(n);
  modes.b.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;  // descending frequency
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    const double sum = v.sum();
    double sign = 1.0;
    if (std::abs(sum) > 1e-8) {
      sign = sum > 0.0 ? 1.0 : -1.0;
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(v[i]) > 1e-8) {
          sign = v[i] > 0.0 ? 1.0 : -1.0;
          break;
        }
      }
    }
    modes.b.col(k) = sign * v;
    modes.omega[k] = std::sqrt(evals[src]);
    modes.eta[k] = delta_k * std::sqrt(constants::hbar / (2.0 * spec.mass_kg * modes.omega[k]));
  }
  return modes;
}

double linear_stability_ratio(std::size_t n_ions) {
  if (n_ions < 2) throw Error(ErrorKind::InvalidCount, "linear stability ratio needs at least two ions");
  const auto n = static_cast<double>(n_ions);
  return 0.77 * n / std::sqrt(std::log(n));
}

}  // namespace iongate

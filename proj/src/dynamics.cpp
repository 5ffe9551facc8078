#include "iongate/dynamics.hpp"

#include "iongate/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace iongate {

namespace integrals {

namespace {

constexpr double kSeriesRadius = 0.5;

}  // namespace

cplx phi1(cplx z) {
  if (std::abs(z) < kSeriesRadius) {
    cplx term = 1.0;
    cplx sum = 1.0;
    for (int n = 1; n < 24; ++n) {
      term *= z / static_cast<double>(n + 1);
      sum += term;
    }
    return sum;
  }
  return (std::exp(z) - 1.0) / z;
}

cplx exp_divided_difference(cplx z0, cplx z1, cplx z2) {
  const double d01 = std::abs(z0 - z1);
  const double d02 = std::abs(z0 - z2);
  const double d12 = std::abs(z1 - z2);
  const double spread = std::max({d01, d02, d12});
  if (spread < kSeriesRadius) {
    // e^c sum_n h_n(w) / (n+2)!, h_n complete homogeneous in the offsets
    const cplx c = (z0 + z1 + z2) / 3.0;
    const cplx w0 = z0 - c;
    const cplx w1 = z1 - c;
    const cplx w2 = z2 - c;
    constexpr int kTerms = 30;
    std::array<cplx, kTerms> h1{};
    std::array<cplx, kTerms> h2{};
    std::array<cplx, kTerms> h3{};
    h1[0] = h2[0] = h3[0] = 1.0;
    for (int n = 1; n < kTerms; ++n) {
      h1[n] = h1[n - 1] * w0;
      h2[n] = h1[n] + w1 * h2[n - 1];
      h3[n] = h2[n] + w2 * h3[n - 1];
    }
    cplx sum = 0.0;
    double fact = 2.0;
    for (int n = 0; n < kTerms; ++n) {
      sum += h3[n] / fact;
      fact *= static_cast<double>(n + 3);
    }
    return std::exp(c) * sum;
  }
  // order the nodes so (a, c) is the farthest pair
  cplx a = z0;
  cplx b = z1;
  cplx c = z2;
  if (d01 >= d02 && d01 >= d12) {
    a = z0;
    b = z2;
    c = z1;
  } else if (d12 >= d01 && d12 >= d02) {
    a = z1;
    b = z0;
    c = z2;
  }
  const cplx ab = std::exp(a) * phi1(b - a);
  const cplx bc = std::exp(b) * phi1(c - b);
  return (bc - ab) / (c - a);
}

cplx exp_integral(double nu, double a, double b) {
  const double h = b - a;
  return std::polar(1.0, nu * a) * h * phi1(cplx(0.0, nu * h));
}

cplx exp_triangle(double nu1, double nu2, double a, double b) {
  const double h = b - a;
  return std::polar(1.0, (nu1 + nu2) * a) * h * h *
         exp_divided_difference(0.0, cplx(0.0, nu1 * h), cplx(0.0, (nu1 + nu2) * h));
}

}  // namespace integrals

void SegmentList::append(double a, double b) {
  start.push_back(a);
  end.push_back(b);
}

void SegmentList::validate() const {
  if (start.size() != end.size() || start.empty()) {
    throw Error(ErrorKind::InvalidArgument, "segment list is empty or inconsistent");
  }
  for (std::size_t n = 0; n < start.size(); ++n) {
    if (!(end[n] > start[n])) throw Error(ErrorKind::InvalidArgument, "segment has non-positive length");
    if (n > 0 && start[n] < end[n - 1] - 1e-12 * (end[n] - start[n])) {
      throw Error(ErrorKind::OverlappingGates, "segments overlap or are out of order");
    }
  }
}

SegmentList uniform_segments(double tau, std::size_t n_seg, double offset) {
  if (n_seg < 1 || !(tau > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "need n_seg >= 1 and tau > 0");
  }
  SegmentList s;
  s.start.reserve(n_seg);
  s.end.reserve(n_seg);
  const auto n = static_cast<double>(n_seg);
  for (std::size_t k = 0; k < n_seg; ++k) {
    s.append(offset + tau * static_cast<double>(k) / n, offset + tau * static_cast<double>(k + 1) / n);
  }
  return s;
}

void PulseSequence::validate() const {
  if (n_seg < 1) throw Error(ErrorKind::InvalidArgument, "n_seg must be at least 1");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (static_cast<std::size_t>(omegas.size()) != n_seg) {
    throw Error(ErrorKind::InvalidArgument, "amplitude vector length " + std::to_string(omegas.size()) +
                                                " does not match n_seg " + std::to_string(n_seg));
  }
  if (!omegas.allFinite() || !std::isfinite(mu)) {
    throw Error(ErrorKind::InvalidArgument, "pulse parameters must be finite");
  }
}

void GateSchedule::validate() const {
  pulse.validate();
  if (starts.empty()) throw Error(ErrorKind::InvalidCount, "schedule needs at least one gate");
  for (std::size_t g = 1; g < starts.size(); ++g) {
    if (starts[g] - starts[g - 1] < pulse.tau * (1.0 - 1e-12)) {
      throw Error(ErrorKind::OverlappingGates,
                  "gate " + std::to_string(g) + " starts before gate " + std::to_string(g - 1) + " ends");
    }
  }
}

GateSchedule GateSchedule::contiguous(const PulseSequence& pulse, std::size_t m) {
  GateSchedule s;
  s.pulse = pulse;
  for (std::size_t g = 0; g < m; ++g) s.starts.push_back(static_cast<double>(g) * pulse.tau);
  return s;
}

PairModel::PairModel(const ModeData& modes, std::size_t ion_i, std::size_t ion_j, double mu,
                     SegmentList segments)
    : segments_(std::move(segments)), mu_(mu), omega_(modes.omega) {
  segments_.validate();
  if (ion_i >= modes.n_ions() || ion_j >= modes.n_ions() || ion_i == ion_j) {
    throw Error(ErrorKind::InvalidArgument, "ion pair must be two distinct ions of the chain");
  }
  const auto nm = static_cast<Eigen::Index>(modes.n_modes());
  const auto ns = static_cast<Eigen::Index>(segments_.size());
  eb_.resize(2, nm);
  for (Eigen::Index k = 0; k < nm; ++k) {
    eb_(0, k) = modes.eta[k] * modes.b(static_cast<Eigen::Index>(ion_i), k);
    eb_(1, k) = modes.eta[k] * modes.b(static_cast<Eigen::Index>(ion_j), k);
  }

  e_plus_.resize(nm, ns);
  e_minus_.resize(nm, ns);
  carrier_.resize(ns);
  for (Eigen::Index n = 0; n < ns; ++n) {
    const double a = segments_.start[static_cast<std::size_t>(n)];
    const double b = segments_.end[static_cast<std::size_t>(n)];
    carrier_[n] = integrals::exp_integral(mu, a, b);
    for (Eigen::Index k = 0; k < nm; ++k) {
      e_plus_(k, n) = integrals::exp_integral(omega_[k] + mu, a, b);
      e_minus_(k, n) = integrals::exp_integral(omega_[k] - mu, a, b);
    }
  }

  // K_{s1 s2}(p, q) = sum_k w_k sum_sg (i/8) s1 s2 sg D_pq(s1 mu + sg w, s2 mu - sg w)
  const cplx pref(0.0, 0.125);
  k_pp_ = Eigen::MatrixXcd::Zero(ns, ns);
  k_pm_ = Eigen::MatrixXcd::Zero(ns, ns);
  for (Eigen::Index k = 0; k < nm; ++k) {
    const double w = eb_(0, k) * eb_(1, k);
    if (w == 0.0) continue;
    const double om = omega_[k];
    for (Eigen::Index p = 0; p < ns; ++p) {
      // E(mu + sg w) over p; sg = +1 -> e_plus, sg = -1 -> conj(e_minus)
      const cplx ep_pos = e_plus_(k, p);
      const cplx ep_neg = std::conj(e_minus_(k, p));
      for (Eigen::Index q = 0; q < p; ++q) {
        // (+,+): nu2 = mu - sg w ; (+,-): nu2 = -mu - sg w
        const cplx pp = ep_pos * std::conj(e_minus_(k, q)) - ep_neg * e_plus_(k, q);
        const cplx pm = -(ep_pos * std::conj(e_plus_(k, q)) - ep_neg * e_minus_(k, q));
        k_pp_(p, q) += w * pref * pp;
        k_pm_(p, q) += w * pref * pm;
      }
      const double a = segments_.start[static_cast<std::size_t>(p)];
      const double b = segments_.end[static_cast<std::size_t>(p)];
      const cplx pp = integrals::exp_triangle(mu + om, mu - om, a, b) -
                      integrals::exp_triangle(mu - om, mu + om, a, b);
      const cplx pm = -(integrals::exp_triangle(mu + om, -mu - om, a, b) -
                        integrals::exp_triangle(mu - om, -mu + om, a, b));
      k_pp_(p, p) += w * pref * pp;
      k_pm_(p, p) += w * pref * pm;
    }
  }
}

Eigen::MatrixXcd PairModel::a_matrix(int ion, double phi_m) const {
  const cplx ph = std::polar(1.0, phi_m);
  Eigen::MatrixXcd a(e_plus_.rows(), e_plus_.cols());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double half = -0.5 * eb_(ion, k);
    for (Eigen::Index n = 0; n < a.cols(); ++n) {
      a(k, n) = half * (ph * e_plus_(k, n) - std::conj(ph) * e_minus_(k, n));
    }
  }
  return a;
}

Eigen::VectorXcd PairModel::alpha(const Eigen::VectorXd& omegas, int ion, double phi_m) const {
  return a_matrix(ion, phi_m) * omegas.cast<cplx>();
}

Eigen::VectorXd PairModel::lambda(const Eigen::VectorXd& omegas, int ion, double phi_m) const {
  const double angle = carrier_angle(omegas, phi_m);
  return eb_.row(ion).transpose().array().square() * angle;
}

double PairModel::carrier_angle(const Eigen::VectorXd& omegas, double phi_m) const {
  const cplx sum = (carrier_.transpose() * omegas.cast<cplx>())(0);
  return (std::polar(1.0, phi_m) * sum).real();
}

Eigen::MatrixXd PairModel::gamma_lower(double phi_i, double phi_j) const {
  const cplx sum_phase = std::polar(1.0, phi_i + phi_j);
  const double diff = std::cos(phi_i - phi_j);
  return (4.0 * (sum_phase * k_pp_ + diff * k_pm_)).real();
}

Eigen::MatrixXd PairModel::gamma(double phi_i, double phi_j) const {
  const Eigen::MatrixXd g = gamma_lower(phi_i, phi_j);
  return 0.5 * (g + g.transpose());
}

double PairModel::theta(const Eigen::VectorXd& omegas, double phi_i, double phi_j) const {
  return omegas.dot(gamma_lower(phi_i, phi_j) * omegas);
}

Eigen::MatrixXd PairModel::residual_matrix(const Eigen::VectorXd& mode_weights, double phi_i,
                                           double phi_j) const {
  const Eigen::MatrixXcd ai = a_matrix(0, phi_i);
  const Eigen::MatrixXcd aj = a_matrix(1, phi_j);
  const Eigen::VectorXcd w = mode_weights.cast<cplx>();
  const Eigen::MatrixXcd m = ai.adjoint() * w.asDiagonal() * ai + aj.adjoint() * w.asDiagonal() * aj;
  const Eigen::MatrixXd re = m.real();
  return 0.5 * (re + re.transpose());
}

MagnusCoefficients PairModel::coefficients(const Eigen::VectorXd& omegas, double phi_i,
                                           double phi_j) const {
  if (static_cast<std::size_t>(omegas.size()) != n_seg()) {
    throw Error(ErrorKind::InvalidArgument, "amplitude vector length does not match the segment count");
  }
  MagnusCoefficients c;
  c.alpha.resize(2, static_cast<Eigen::Index>(n_modes()));
  c.alpha.row(0) = alpha(omegas, 0, phi_i).transpose();
  c.alpha.row(1) = alpha(omegas, 1, phi_j).transpose();
  c.lambda.resize(2, static_cast<Eigen::Index>(n_modes()));
  c.lambda.row(0) = lambda(omegas, 0, phi_i).transpose();
  c.lambda.row(1) = lambda(omegas, 1, phi_j).transpose();
  c.theta = theta(omegas, phi_i, phi_j);
  c.carrier_angle = {carrier_angle(omegas, phi_i), carrier_angle(omegas, phi_j)};
  return c;
}

Eigen::RowVectorXcd alpha_row(double omega_k, double eta_k, double b_jk, double mu, double tau,
                              std::size_t n_seg, double phi_m) {
  const SegmentList seg = uniform_segments(tau, n_seg);
  const cplx ph = std::polar(1.0, phi_m);
  Eigen::RowVectorXcd row(static_cast<Eigen::Index>(n_seg));
  for (std::size_t n = 0; n < n_seg; ++n) {
    const cplx ep = integrals::exp_integral(omega_k + mu, seg.start[n], seg.end[n]);
    const cplx em = integrals::exp_integral(omega_k - mu, seg.start[n], seg.end[n]);
    row[static_cast<Eigen::Index>(n)] = -0.5 * eta_k * b_jk * (ph * ep - std::conj(ph) * em);
  }
  return row;
}

double carrier_angle(const PulseSequence& seq, int which_ion) {
  seq.validate();
  const double phi = which_ion == 0 ? seq.phi_m_i : seq.phi_m_j;
  const SegmentList seg = seq.segments();
  cplx sum = 0.0;
  for (std::size_t n = 0; n < seg.size(); ++n) {
    sum += seq.omegas[static_cast<Eigen::Index>(n)] * integrals::exp_integral(seq.mu, seg.start[n], seg.end[n]);
  }
  return (std::polar(1.0, phi) * sum).real();
}

Eigen::VectorXd lambda_coeffs(const PulseSequence& seq, const ModeData& modes, std::size_t ion,
                              double phi_m) {
  PulseSequence s = seq;
  s.phi_m_i = phi_m;
  const double angle = carrier_angle(s, 0);
  Eigen::VectorXd out(static_cast<Eigen::Index>(modes.n_modes()));
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double eb = modes.eta[k] * modes.b(static_cast<Eigen::Index>(ion), k);
    out[k] = eb * eb * angle;
  }
  return out;
}

Eigen::MatrixXd gamma_matrix(const ModeData& modes, std::size_t ion_i, std::size_t ion_j, double mu,
                             double tau, std::size_t n_seg) {
  return PairModel(modes, ion_i, ion_j, mu, uniform_segments(tau, n_seg)).gamma(0.0, 0.0);
}

MagnusCoefficients magnus_coefficients(const PulseSequence& seq, const ModeData& modes,
                                       std::size_t ion_i, std::size_t ion_j) {
  seq.validate();
  const PairModel model(modes, ion_i, ion_j, seq.mu, seq.segments());
  return model.coefficients(seq.omegas, seq.phi_m_i, seq.phi_m_j);
}

double cross_gate_theta(const Eigen::MatrixXcd& alpha_late, const Eigen::MatrixXcd& alpha_early) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < alpha_late.cols(); ++k) {
    sum += (alpha_late(0, k) * std::conj(alpha_early(1, k))).imag();
    sum += (alpha_late(1, k) * std::conj(alpha_early(0, k))).imag();
  }
  return sum;
}

MagnusCoefficients accumulate_gates(const GateSchedule& schedule, const ModeData& modes,
                                    std::size_t ion_i, std::size_t ion_j) {
  schedule.validate();
  const PulseSequence& p = schedule.pulse;
  MagnusCoefficients total;
  total.alpha = Eigen::MatrixXcd::Zero(2, static_cast<Eigen::Index>(modes.n_modes()));
  total.lambda = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(modes.n_modes()));
  for (double t0 : schedule.starts) {
    const PairModel model(modes, ion_i, ion_j, p.mu, p.segments(t0));
    const MagnusCoefficients g = model.coefficients(p.omegas, p.phi_m_i, p.phi_m_j);
    total.theta += g.theta + cross_gate_theta(g.alpha, total.alpha);
    total.alpha += g.alpha;
    total.lambda += g.lambda;
    total.carrier_angle += g.carrier_angle;
  }
  return total;
}

ModeData select_modes(const ModeData& modes, const std::vector<std::size_t>& indices) {
  ModeData out;
  out.delta_k = modes.delta_k;
  const auto n = static_cast<Eigen::Index>(indices.size());
  out.omega.resize(n);
  out.eta.resize(n);
  out.b.resize(modes.b.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto k = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]);
    if (k >= static_cast<Eigen::Index>(modes.n_modes())) {
      throw Error(ErrorKind::InvalidArgument, "mode index out of range");
    }
    out.omega[c] = modes.omega[k];
    out.eta[c] = modes.eta[k];
    out.b.col(c) = modes.b.col(k);
  }
  return out;
}

}  // namespace iongate

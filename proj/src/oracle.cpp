#include "iongate/oracle.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "iongate/fit.hpp"
#include "iongate/parallel.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iongate {

namespace {

constexpr std::size_t kMaxCutoff = 40;
constexpr std::size_t kMaxModes = 2;

struct Basis {
  std::size_t cutoff = 0;
  std::size_t n_modes = 0;
  std::size_t dim = 0;                 // phonon dimension
  Eigen::MatrixXd v;                   // eigenvectors of the position operators, Kronecker over modes
  Eigen::VectorXd energy;              // sum_k omega_k n_k per phonon index
  Eigen::ArrayXd cos_y[2], sin_y[2];   // per ion, in the position eigenbasis
  std::vector<Eigen::Index> top;       // phonon indices with some n_k = cutoff - 1
};

Basis make_basis(const OracleSystem& sys, std::size_t cutoff) {
  Basis b;
  b.cutoff = cutoff;
  b.n_modes = sys.n_modes();
  b.dim = 1;
  for (std::size_t k = 0; k < b.n_modes; ++k) b.dim *= cutoff;
  const auto c = static_cast<Eigen::Index>(cutoff);
  std::vector<Eigen::VectorXd> eig(b.n_modes);
  b.v = Eigen::MatrixXd::Ones(1, 1);
  for (std::size_t k = 0; k < b.n_modes; ++k) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(c, c);
    for (Eigen::Index n = 1; n < c; ++n) {
      x(n - 1, n) = x(n, n - 1) = std::sqrt(static_cast<double>(n));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
    eig[k] = es.eigenvalues();
    const Eigen::MatrixXd& e = es.eigenvectors();
    Eigen::MatrixXd kron(b.v.rows() * c, b.v.cols() * c);
    for (Eigen::Index r = 0; r < b.v.rows(); ++r)
      for (Eigen::Index q = 0; q < b.v.cols(); ++q) kron.block(r * c, q * c, c, c) = b.v(r, q) * e;
    b.v = std::move(kron);
  }
  const auto d = static_cast<Eigen::Index>(b.dim);
  b.energy.resize(d);
  for (int ion = 0; ion < 2; ++ion) {
    b.cos_y[ion].resize(d);
    b.sin_y[ion].resize(d);
  }
  for (Eigen::Index p = 0; p < d; ++p) {
    // row-major over modes, mode 0 slowest
    Eigen::Index rest = p;
    std::vector<Eigen::Index> n(b.n_modes);
    for (std::size_t k = b.n_modes; k-- > 0;) {
      n[k] = rest % c;
      rest /= c;
    }
    double e = 0.0;
    bool top = false;
    double y[2] = {0.0, 0.0};
    for (std::size_t k = 0; k < b.n_modes; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      e += sys.omega[kk] * static_cast<double>(n[k]);
      top = top || n[k] == c - 1;
      for (int ion = 0; ion < 2; ++ion) y[ion] += sys.eta[kk] * sys.b(ion, kk) * eig[k][n[k]];
    }
    b.energy[p] = e;
    if (top) b.top.push_back(p);
    for (int ion = 0; ion < 2; ++ion) {
      b.cos_y[ion][p] = std::cos(y[ion]);
      b.sin_y[ion][p] = std::sin(y[ion]);
    }
  }
  return b;
}

// Real view of a complex matrix: rows interleave real and imaginary parts.
Eigen::Map<Eigen::MatrixXd> real_view(Eigen::MatrixXcd& m) {
  return {reinterpret_cast<double*>(m.data()), 2 * m.rows(), m.cols()};
}

// Works on states laid out as rows (spin, trajectory), columns phonon index;
// spin index 2 s_i + s_j is the slowest row index.
struct Drive {
  const PulseSequence* seq = nullptr;
  const Basis* basis = nullptr;
  double eps = 0.0;
  double d_mu = 0.0;
  Eigen::Index trajectories = 0;
  mutable Eigen::MatrixXcd phi, out;
  mutable Eigen::RowVectorXcd rot, g01, g10;

  // result = -i H(t) state for amplitude omega on both ions
  void apply(double t, double omega, const Eigen::MatrixXcd& state, Eigen::MatrixXcd& result) const {
    const Basis& b = *basis;
    const Eigen::Index tr = trajectories;
    rot = (cplx(0.0, -t) * b.energy.transpose().cast<cplx>()).array().exp().matrix();
    phi = state.array().rowwise() * rot.array();
    out.resize(phi.rows(), phi.cols());
    real_view(out).noalias() = real_view(phi) * b.v;
    phi.swap(out);
    out.setZero();
    const double phi_m[2] = {seq->phi_m_i, seq->phi_m_j};
    const double phi_s[2] = {seq->phi_s_i, seq->phi_s_j};
    for (int ion = 0; ion < 2; ++ion) {
      const double a = seq->mu * t + phi_m[ion];
      const cplx chi = std::polar(omega, d_mu * t + phi_s[ion]);
      const double ca = std::cos(a), sa = std::sin(a);
      const auto n = b.cos_y[ion].size();
      g01.resize(n);
      g10.resize(n);
      for (Eigen::Index p = 0; p < n; ++p) {
        // cos(a - y), sin(a - y) in the position eigenbasis
        const double c = ca * b.cos_y[ion][p] + sa * b.sin_y[ion][p];
        const double sn = sa * b.cos_y[ion][p] - ca * b.sin_y[ion][p];
        g01[p] = chi * cplx(c, eps * sn);
        g10[p] = std::conj(chi) * cplx(c, -eps * sn);
      }
      const Eigen::Index stride = ion == 0 ? 2 : 1;
      for (Eigen::Index low : {Eigen::Index(0), Eigen::Index(ion == 0 ? 1 : 2)}) {
        const Eigen::Index up = low + stride;
        out.middleRows(low * tr, tr).array() += phi.middleRows(up * tr, tr).array().rowwise() * g01.array();
        out.middleRows(up * tr, tr).array() += phi.middleRows(low * tr, tr).array().rowwise() * g10.array();
      }
    }
    result.resize(out.rows(), out.cols());
    real_view(result).noalias() = real_view(out) * b.v.transpose();
    result.array().rowwise() *= cplx(0.0, -1.0) * rot.conjugate().array();
  }
};

double default_dt(const OracleSystem& sys, const PulseSequence& seq) {
  double fastest = std::abs(seq.mu);
  for (Eigen::Index k = 0; k < sys.omega.size(); ++k) fastest = std::max(fastest, std::abs(sys.omega[k]));
  return constants::two_pi / (200.0 * fastest);
}

Eigen::MatrixXcd initial_states(const Basis& b, const std::vector<std::vector<std::size_t>>& fock) {
  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(4 * b.dim),
                                                static_cast<Eigen::Index>(fock.size()));
  for (std::size_t col = 0; col < fock.size(); ++col) {
    if (fock[col].size() != b.n_modes) {
      throw Error(ErrorKind::InvalidArgument, "Fock occupation needs one entry per included mode");
    }
    std::size_t p = 0;
    for (std::size_t k = 0; k < b.n_modes; ++k) {
      if (fock[col][k] >= b.cutoff) {
        throw Error(ErrorKind::CutoffInsufficient, "initial Fock state lies above the cutoff");
      }
      p = p * b.cutoff + fock[col][k];
    }
    // spin |00> is block 0
    psi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(col)) = 1.0;
  }
  return psi;
}

double top_population(const Basis& b, const Eigen::MatrixXcd& state, Eigen::Index trajectories) {
  Eigen::VectorXd pop = Eigen::VectorXd::Zero(state.rows());
  for (Eigen::Index p : b.top) pop += state.col(p).cwiseAbs2();
  double worst = 0.0;
  for (Eigen::Index t = 0; t < trajectories; ++t) {
    double v = 0.0;
    for (Eigen::Index s = 0; s < 4; ++s) v += pop[s * trajectories + t];
    worst = std::max(worst, v);
  }
  return worst;
}

OracleState integrate(const PulseSequence& seq, const OracleConfig& cfg, const Basis& basis,
                      const Eigen::MatrixXcd& psi0, double dt) {
  const auto d = static_cast<Eigen::Index>(basis.dim);
  const Eigen::Index tr = psi0.cols();
  Eigen::MatrixXcd psi(4 * tr, d);
  for (Eigen::Index s = 0; s < 4; ++s) psi.middleRows(s * tr, tr) = psi0.middleRows(s * d, d).transpose();
  Drive drive{&seq, &basis, cfg.delta_omega_asym, cfg.delta_mu_asym, tr, {}, {}, {}, {}, {}};
  OracleState st;
  st.dt = dt;
  Eigen::MatrixXcd k1, k2, k3, k4, tmp;
  const SegmentList segs = seq.segments();
  for (std::size_t n = 0; n < segs.size(); ++n) {
    const double a = segs.start[n];
    const double len = segs.end[n] - a;
    const double omega = seq.omegas[static_cast<Eigen::Index>(n)];
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt - 1e-9)));
    const double h = len / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = a + h * static_cast<double>(k);
      drive.apply(t, omega, psi, k1);
      tmp = psi + 0.5 * h * k1;
      drive.apply(t + 0.5 * h, omega, tmp, k2);
      tmp = psi + 0.5 * h * k2;
      drive.apply(t + 0.5 * h, omega, tmp, k3);
      tmp = psi + h * k3;
      drive.apply(t + h, omega, tmp, k4);
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      st.top_population = std::max(st.top_population, top_population(basis, psi, tr));
    }
  }
  st.psi.resize(4 * d, tr);
  for (Eigen::Index s = 0; s < 4; ++s) st.psi.middleRows(s * d, d) = psi.middleRows(s * tr, tr).transpose();
  for (Eigen::Index col = 0; col < tr; ++col) {
    st.norm_drift = std::max(st.norm_drift, std::abs(st.psi.col(col).squaredNorm() - psi0.col(col).squaredNorm()));
  }
  return st;
}

struct Converged {
  OracleState fine;
  Eigen::MatrixXcd coarse;
};

Converged converged_run(const OracleSystem& sys, const PulseSequence& seq, const OracleConfig& cfg,
                        const std::vector<std::vector<std::size_t>>& fock) {
  sys.validate();
  cfg.validate();
  seq.validate();
  const Basis basis = make_basis(sys, cfg.fock_cutoff);
  const Eigen::MatrixXcd psi0 = initial_states(basis, fock);
  double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(sys, seq);
  OracleState prev = integrate(seq, cfg, basis, psi0, dt);
  for (int h = 1; h <= std::max(cfg.max_halvings, 1); ++h) {
    dt *= 0.5;
    OracleState next = integrate(seq, cfg, basis, psi0, dt);
    double change = 0.0;
    for (Eigen::Index col = 0; col < psi0.cols(); ++col) {
      change = std::max(change, (next.psi.col(col) - prev.psi.col(col)).norm());
    }
    next.step_change = change;
    next.halvings = h;
    if (change <= cfg.step_tolerance) {
      if (next.top_population > cfg.top_population_limit) {
        throw Error(ErrorKind::CutoffInsufficient,
                    "top Fock level population " + std::to_string(next.top_population) + " exceeds the limit");
      }
      return {std::move(next), std::move(prev.psi)};
    }
    prev = std::move(next);
  }
  throw Error(ErrorKind::StepNotConverged,
              "state still changes by " + std::to_string(prev.step_change) + " after step halving");
}

double state_fidelity(const Eigen::VectorXcd& psi, const Eigen::Vector4cd& ideal) {
  const Eigen::Index d = psi.size() / 4;
  double f = 0.0;
  for (Eigen::Index p = 0; p < d; ++p) {
    cplx amp = 0.0;
    for (Eigen::Index s = 0; s < 4; ++s) amp += std::conj(ideal[s]) * psi[s * d + p];
    f += std::norm(amp);
  }
  return f;
}

// Basis change from the computational basis to the sigma^n eigenbasis of
// both qubits, ordered ++, +-, -+, --.
Eigen::Matrix4cd spin_basis(double phi_s_i, double phi_s_j) {
  auto one = [](double phi) {
    Eigen::Matrix2cd w;
    const cplx e = std::polar(1.0, -phi);
    w << 1.0, 1.0, e, -e;
    return Eigen::Matrix2cd(w / std::sqrt(2.0));
  };
  const Eigen::Matrix2cd a = one(phi_s_i);
  const Eigen::Matrix2cd b = one(phi_s_j);
  Eigen::Matrix4cd w;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) w.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  return w;
}

struct ThermalTerms {
  std::vector<std::vector<std::size_t>> fock;
  std::vector<double> weight;
  double covered = 0.0;
};

ThermalTerms thermal_terms(const OracleSystem& sys, const ThermalSpec& thermal, std::size_t cutoff,
                           std::size_t n_terms) {
  const Eigen::VectorXd coth = thermal.coth(sys.mode_data());
  const std::size_t k_modes = sys.n_modes();
  std::vector<double> nbar(k_modes);
  for (std::size_t k = 0; k < k_modes; ++k) nbar[k] = 0.5 * (coth[static_cast<Eigen::Index>(k)] - 1.0);
  auto p1 = [](double nb, std::size_t n) {
    if (nb <= 0.0) return n == 0 ? 1.0 : 0.0;
    return std::pow(nb / (nb + 1.0), static_cast<double>(n)) / (nb + 1.0);
  };
  std::vector<std::pair<double, std::vector<std::size_t>>> all;
  std::size_t total = 1;
  for (std::size_t k = 0; k < k_modes; ++k) total *= cutoff;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<std::size_t> n(k_modes);
    std::size_t rest = idx;
    for (std::size_t k = k_modes; k-- > 0;) {
      n[k] = rest % cutoff;
      rest /= cutoff;
    }
    double w = 1.0;
    for (std::size_t k = 0; k < k_modes; ++k) w *= p1(nbar[k], n[k]);
    if (w > 0.0) all.emplace_back(w, n);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  ThermalTerms t;
  for (const auto& [w, n] : all) {
    if (n_terms > 0 ? t.fock.size() >= n_terms : t.covered >= 0.9999) break;
    t.fock.push_back(n);
    t.weight.push_back(w);
    t.covered += w;
  }
  if (n_terms == 0 && t.covered < 0.9999) {
    throw Error(ErrorKind::CutoffInsufficient, "Fock cutoff too small to hold 99.99 % of the thermal weight");
  }
  return t;
}

double weighted_fidelity(const Eigen::MatrixXcd& psi, const ThermalTerms& terms, const Eigen::Vector4cd& ideal) {
  std::vector<double> parts;
  for (std::size_t k = 0; k < terms.weight.size(); ++k) {
    parts.push_back(terms.weight[k] * state_fidelity(psi.col(static_cast<Eigen::Index>(k)), ideal));
  }
  return compensated_sum(parts) / compensated_sum(terms.weight);
}

}  // namespace

void OracleSystem::validate() const {
  const Eigen::Index k = omega.size();
  if (k < 1 || k > static_cast<Eigen::Index>(kMaxModes)) {
    throw Error(ErrorKind::InvalidArgument, "oracle handles one or two modes");
  }
  if (eta.size() != k || b.rows() != 2 || b.cols() != k) {
    throw Error(ErrorKind::InvalidArgument, "oracle mode arrays have inconsistent sizes");
  }
  if (!omega.allFinite() || !eta.allFinite() || !b.allFinite() || (omega.array() <= 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "oracle modes need finite data and positive frequencies");
  }
}

ModeData OracleSystem::mode_data() const {
  ModeData m;
  m.omega = omega;
  m.eta = eta;
  m.b = b;
  m.delta_k = 0.0;
  return m;
}

OracleSystem oracle_system(const ModeData& modes, std::size_t ion_i, std::size_t ion_j,
                           const std::vector<std::size_t>& mode_indices) {
  const auto n_ions = static_cast<std::size_t>(modes.b.rows());
  if (ion_i >= n_ions || ion_j >= n_ions || ion_i == ion_j) {
    throw Error(ErrorKind::InvalidArgument, "oracle ions must be two distinct chain ions");
  }
  OracleSystem s;
  const auto k = static_cast<Eigen::Index>(mode_indices.size());
  s.omega.resize(k);
  s.eta.resize(k);
  s.b.resize(2, k);
  for (Eigen::Index q = 0; q < k; ++q) {
    const auto m = static_cast<Eigen::Index>(mode_indices[static_cast<std::size_t>(q)]);
    if (m >= modes.omega.size()) throw Error(ErrorKind::InvalidArgument, "mode index out of range");
    s.omega[q] = modes.omega[m];
    s.eta[q] = modes.eta[m];
    s.b(0, q) = modes.b(static_cast<Eigen::Index>(ion_i), m);
    s.b(1, q) = modes.b(static_cast<Eigen::Index>(ion_j), m);
  }
  s.validate();
  return s;
}

void OracleConfig::validate() const {
  if (fock_cutoff < 2) throw Error(ErrorKind::InvalidArgument, "Fock cutoff must be at least 2");
  if (fock_cutoff > kMaxCutoff) {
    throw Error(ErrorKind::InvalidArgument, "Fock cutoff above 40 is outside the supported size");
  }
  if (dt < 0.0 || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!std::isfinite(delta_omega_asym) || !std::isfinite(delta_mu_asym)) {
    throw Error(ErrorKind::InvalidArgument, "asymmetry parameters must be finite");
  }
  if (!(step_tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "step tolerance must be positive");
}

OracleState evolve_exact(const OracleSystem& system, const PulseSequence& seq, const OracleConfig& cfg,
                         const std::vector<std::vector<std::size_t>>& fock) {
  return converged_run(system, seq, cfg, fock).fine;
}

OracleState evolve_fixed(const OracleSystem& system, const PulseSequence& seq, const OracleConfig& cfg,
                         const std::vector<std::vector<std::size_t>>& fock, double dt) {
  system.validate();
  cfg.validate();
  seq.validate();
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  const Basis basis = make_basis(system, cfg.fock_cutoff);
  return integrate(seq, cfg, basis, initial_states(basis, fock), dt);
}

Eigen::Vector4cd ideal_image(const PulseSequence& seq, int target_sign) {
  const Eigen::Matrix4cd w = spin_basis(seq.phi_s_i, seq.phi_s_j);
  const Eigen::Matrix4cd u = w * ideal_xx_pm((target_sign >= 0 ? 1.0 : -1.0) * constants::pi / 4.0) * w.adjoint();
  return u.col(0);
}

OracleResult thermal_fidelity(const OracleSystem& system, const PulseSequence& seq, const OracleConfig& cfg,
                              const ThermalSpec& thermal, int target_sign, std::size_t n_terms) {
  system.validate();
  cfg.validate();
  const ThermalTerms terms = thermal_terms(system, thermal, cfg.fock_cutoff, n_terms);
  const Converged run = converged_run(system, seq, cfg, terms.fock);
  const Eigen::Vector4cd ideal = ideal_image(seq, target_sign);
  OracleResult r;
  r.fidelity = weighted_fidelity(run.fine.psi, terms, ideal);
  r.step_change = std::abs(r.fidelity - weighted_fidelity(run.coarse, terms, ideal));
  r.top_population = run.fine.top_population;
  r.weight_covered = terms.covered;
  r.n_terms = terms.fock.size();
  r.dt = run.fine.dt;
  return r;
}

double analytic_state_fidelity(const OracleSystem& system, const PulseSequence& seq, const ThermalSpec& thermal,
                               int target_sign) {
  system.validate();
  seq.validate();
  const ModeData modes = system.mode_data();
  const PairModel model(modes, 0, 1, seq.mu, seq.segments());
  const MagnusCoefficients c = model.coefficients(seq.omegas, seq.phi_m_i, seq.phi_m_j);
  const Eigen::VectorXd coth = thermal.coth(modes);
  const Eigen::Matrix4cd w = spin_basis(seq.phi_s_i, seq.phi_s_j);
  Eigen::Matrix4cd rho0 = Eigen::Matrix4cd::Zero();
  rho0(0, 0) = 1.0;
  Eigen::Matrix4cd rho = final_density_matrix(w.adjoint() * rho0 * w, c, coth, true);
  // carrier rotation exp(-i c sigma^n) is diagonal in the sigma^n basis
  Eigen::Vector4cd u;
  for (int s = 0; s < 4; ++s) {
    const double si = (s & 2) ? -1.0 : 1.0;
    const double sj = (s & 1) ? -1.0 : 1.0;
    u[s] = std::polar(1.0, -(si * c.carrier_angle[0] + sj * c.carrier_angle[1]));
  }
  rho = u.asDiagonal() * rho * u.conjugate().asDiagonal();
  const Eigen::Vector4cd ideal = w.adjoint() * ideal_image(seq, target_sign);
  return std::real(ideal.dot(rho * ideal));
}

CarrierRotation carrier_rotation(const PulseSequence& seq, double epsilon) {
  seq.validate();
  // Integrate in the frame of the epsilon = 0 evolution exp(-i A(t) sigma_x),
  // A(t) = int Omega cos(mu t); only the O(epsilon) part remains.
  const SegmentList segs = seq.segments();
  const double mu = seq.mu;
  auto rhs = [&](double t, double omega, double a_start, double t_start, const Eigen::Matrix2cd& v) {
    const double a = a_start + omega * (std::sin(mu * t) - std::sin(mu * t_start)) / mu;
    const double f = -epsilon * omega * std::sin(mu * t);
    // f (cos 2A sigma_y - sin 2A sigma_z)
    Eigen::Matrix2cd h;
    const double cy = f * std::cos(2.0 * a);
    const double cz = -f * std::sin(2.0 * a);
    h << cz, cplx(0.0, -cy), cplx(0.0, cy), -cz;
    return Eigen::Matrix2cd(cplx(0.0, -1.0) * h * v);
  };
  auto run = [&](double dt, double& a_total) {
    Eigen::Matrix2cd v = Eigen::Matrix2cd::Identity();
    double a_start = 0.0;
    for (std::size_t n = 0; n < segs.size(); ++n) {
      const double t0 = segs.start[n];
      const double len = segs.end[n] - t0;
      const double omega = seq.omegas[static_cast<Eigen::Index>(n)];
      const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt - 1e-9)));
      const double h = len / static_cast<double>(steps);
      for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + h * static_cast<double>(k);
        const Eigen::Matrix2cd k1 = rhs(t, omega, a_start, t0, v);
        const Eigen::Matrix2cd k2 = rhs(t + 0.5 * h, omega, a_start, t0, v + 0.5 * h * k1);
        const Eigen::Matrix2cd k3 = rhs(t + 0.5 * h, omega, a_start, t0, v + 0.5 * h * k2);
        const Eigen::Matrix2cd k4 = rhs(t + h, omega, a_start, t0, v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      a_start += omega * (std::sin(mu * segs.end[n]) - std::sin(mu * t0)) / mu;
    }
    a_total = a_start;
    Eigen::Matrix2cd u0;
    u0 << std::cos(a_total), cplx(0.0, -std::sin(a_total)), cplx(0.0, -std::sin(a_total)), std::cos(a_total);
    const Eigen::Matrix2cd u = u0 * v;
    // u = cos(phi) - i sin(phi) n.sigma up to the unit determinant
    const cplx det_root = std::sqrt(u.determinant());
    const Eigen::Matrix2cd su = u / det_root;
    const double s = std::sqrt(std::norm(su(0, 1)) + std::pow(std::imag(su(0, 0)), 2));
    const double angle = std::atan2(s, std::abs(std::real(su(0, 0))));
    return angle;
  };
  double dt = constants::two_pi / (200.0 * std::abs(mu));
  double a_total = 0.0;
  double prev = run(dt, a_total);
  for (int h = 0; h < 6; ++h) {
    dt *= 0.5;
    const double next = run(dt, a_total);
    const bool done = std::abs(next - prev) <= 1e-12 + 1e-6 * std::abs(next);
    prev = next;
    if (done) break;
  }
  CarrierRotation r;
  r.delta_phi = prev;
  r.infidelity_estimate = prev * prev;
  return r;
}

double carrier_threshold(const PulseSequence& seq, double target) {
  if (!(target > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold target must be positive");
  auto excess = [&](double eps) { return carrier_rotation(seq, eps).infidelity_estimate - target; };
  if (excess(0.0) >= 0.0) return 0.0;
  // the angle grows almost linearly in epsilon; bracket around that estimate
  const double probe = 1e-4;
  const double slope = std::max(carrier_rotation(seq, probe).delta_phi / probe, 1e-12);
  double lo = 0.0;
  double hi = 0.5 * std::sqrt(target) / slope;
  double f_hi = excess(hi);
  while (f_hi < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 10.0) throw Error(ErrorKind::NonConvergence, "carrier rotation never reaches the target");
    f_hi = excess(hi);
  }
  std::uintmax_t iterations = 60;
  const auto root = boost::math::tools::toms748_solve(excess, lo, hi, excess(lo), f_hi,
                                                      boost::math::tools::eps_tolerance<double>(30), iterations);
  return 0.5 * (root.first + root.second);
}

AsymmetrySweep asymmetry_sweep(const OracleSystem& system, const PulseSequence& seq, const OracleConfig& cfg,
                               const ThermalSpec& thermal, int target_sign,
                               const std::vector<double>& delta_omegas, const std::vector<double>& delta_mus,
                               unsigned threads) {
  AsymmetrySweep sweep;
  const std::size_t nm = delta_mus.size();
  sweep.points.resize(delta_omegas.size() * nm);
  parallel_for(sweep.points.size(), threads, [&](std::size_t k) {
    OracleConfig c = cfg;
    c.delta_omega_asym = delta_omegas[k / nm];
    c.delta_mu_asym = delta_mus[k % nm];
    const OracleResult r = thermal_fidelity(system, seq, c, thermal, target_sign);
    sweep.points[k] = {c.delta_omega_asym, c.delta_mu_asym, r.fidelity, r.top_population};
  });
  const auto origin = std::find_if(sweep.points.begin(), sweep.points.end(),
                                   [](const AsymmetryPoint& p) { return p.delta_omega == 0.0 && p.delta_mu == 0.0; });
  sweep.baseline_infidelity = origin != sweep.points.end()
                                  ? 1.0 - origin->fidelity
                                  : 1.0 - thermal_fidelity(system, seq, cfg, thermal, target_sign).fidelity;
  std::vector<double> xo, yo, xm, ym;
  for (const AsymmetryPoint& p : sweep.points) {
    const double excess = (1.0 - p.fidelity) - sweep.baseline_infidelity;
    if (p.delta_mu == 0.0 && p.delta_omega != 0.0) {
      xo.push_back(std::abs(p.delta_omega));
      yo.push_back(excess);
    }
    if (p.delta_omega == 0.0 && p.delta_mu != 0.0) {
      xm.push_back(std::abs(p.delta_mu));
      ym.push_back(excess);
    }
  }
  if (xo.size() >= 2) sweep.exponent_omega = fit_power_law(xo, yo).exponent;
  if (xm.size() >= 2) sweep.exponent_mu = fit_power_law(xm, ym).exponent;
  return sweep;
}

}  // namespace iongate

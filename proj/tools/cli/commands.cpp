#include "cli/commands.hpp"

#include "iongate/budget.hpp"
#include "iongate/constants.hpp"
#include "iongate/error.hpp"
#include "iongate/oracle.hpp"
#include "iongate/parallel.hpp"
#include "iongate/sequence.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <ostream>

namespace iongate::cli {

namespace {

using constants::two_pi;

double hz(double rad_s) { return rad_s / two_pi; }

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ConfigInvalid, field + ": " + what);
}

Json header(const RunConfig& cfg, const std::string& command) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["config_fnv1a"] = cfg.hash;
  j["command"] = command;
  j["seed"] = cfg.seed;
  return j;
}

std::string label(const IonPair& p) { return std::to_string(p.first) + "_" + std::to_string(p.second); }

Json vec(const Eigen::VectorXd& v, double scale = 1.0) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k] * scale);
  return a;
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct Chain {
  Crystal crystal;
  ModeData modes;
};

Chain build_chain(const RunConfig& cfg) {
  Chain c;
  c.crystal = solve_equilibrium(cfg.trap);
  c.modes = transverse_modes(cfg.trap, c.crystal, cfg.delta_k);
  return c;
}

GateDesign design_pair(const RunConfig& cfg, const Chain& chain, const PairConfig& p) {
  return design_gate(chain.modes, {p.ions.first, p.ions.second, p.n_seg, p.tau, p.mu, cfg.rabi_cap, cfg.target_sign},
                     cfg.thermal);
}

Json design_json(const GateDesign& d) {
  Json j;
  j["ions"] = {d.ion_i, d.ion_j};
  j["n_seg"] = d.pulse.n_seg;
  j["tau_s"] = d.pulse.tau;
  j["mu_hz"] = hz(d.pulse.mu);
  j["target_sign"] = d.target_sign;
  j["theta"] = d.solution.theta;
  j["design_infidelity"] = d.solution.design_infidelity;
  j["approx_infidelity"] = 1.0 - d.report.f_approx;
  j["max_rabi_hz"] = hz(d.solution.max_amplitude);
  j["rabi_cap_hz"] = hz(d.rabi_cap);
  j["over_cap"] = d.solution.over_cap;
  j["pencil_lambda"] = d.solution.lambda;
  j["pencil_residual"] = d.solution.residual;
  j["omegas_hz"] = vec(d.pulse.omegas, 1.0 / two_pi);
  return j;
}

Json box_json(const BoxReport& b) {
  Json j;
  j["nominal"] = b.nominal;
  j["worst_detuning"] = b.worst_detuning;
  j["worst_intensity"] = b.worst_intensity;
  j["worst_duration"] = b.worst_duration;
  j["worst_case"] = b.worst_case;
  j["worst_joint"] = b.worst_joint;
  return j;
}

struct Evaluated {
  GateDesign nominal;
  std::optional<WorkingPoint> wp;
  BoxReport box;
  const GateDesign& final_design() const { return wp ? wp->design : nominal; }
};

Evaluated evaluate_pair(const RunConfig& cfg, const Chain& chain, const PairConfig& p) {
  Evaluated e{design_pair(cfg, chain, p), std::nullopt, {}};
  if (cfg.scan.working_point) {
    WorkingPointOptions o;
    o.span = cfg.scan.span;
    o.step = cfg.scan.step;
    o.box = cfg.scan.box;
    o.threads = cfg.threads;
    e.wp = select_working_point(e.nominal, o);
    e.box = e.wp->box;
  } else {
    e.box = box_worst_case(e.nominal, cfg.scan.box, cfg.threads);
  }
  return e;
}

Json evaluated_json(const Evaluated& e) {
  Json j;
  j["design"] = design_json(e.nominal);
  if (e.wp) {
    Json w;
    w["mu_offset_hz"] = hz(e.wp->mu_prime - e.nominal.pulse.mu);
    w["mu_prime_hz"] = hz(e.wp->mu_prime);
    w["mean_rescale"] = e.wp->mean_rescale;
    w["rescale"] = e.wp->rescale;
    w["design_infidelity"] = e.wp->design.solution.design_infidelity;
    w["max_rabi_hz"] = hz(e.wp->design.solution.max_amplitude);
    j["working_point"] = w;
  } else {
    j["working_point"] = nullptr;
  }
  j["box"] = box_json(e.box);
  return j;
}

const std::vector<PairConfig>& require_pairs(const RunConfig& cfg, const std::string& command) {
  if (cfg.pairs.empty()) config_error("pairs", command + " needs at least one configured ion pair");
  return cfg.pairs;
}

/// Pair from the command line merged with its config entry.
PairConfig resolve_pair(const RunConfig& cfg, const Overrides& o) {
  std::optional<IonPair> ions = o.pair;
  if (!ions) {
    if (cfg.pairs.size() != 1) config_error("pair", "select a pair with --pair i,j");
    ions = cfg.pairs.front().ions;
  }
  if (ions->first >= cfg.trap.n_ions || ions->second >= cfg.trap.n_ions || ions->first == ions->second) {
    config_error("pair", "ions must be two distinct chain indices");
  }
  PairConfig p;
  const PairConfig* base = cfg.find_pair(*ions);
  if (base) p = *base;
  p.ions = *ions;
  if (o.n_seg) p.n_seg = *o.n_seg;
  if (o.tau) p.tau = *o.tau;
  if (o.mu_hz) p.mu = two_pi * *o.mu_hz;
  if (p.n_seg == 0) config_error("n_seg", "missing; pass --nseg or configure the pair");
  if (!(p.tau > 0.0)) config_error("tau_s", "missing; pass --tau or configure the pair");
  if (!(p.mu > 0.0)) config_error("mu_hz", "missing; pass --mu or configure the pair");
  return p;
}

std::vector<PairConfig> selected_pairs(const RunConfig& cfg, const Overrides& o, const std::string& command) {
  if (o.pair) return {resolve_pair(cfg, o)};
  return require_pairs(cfg, command);
}

std::vector<Artifact> cmd_crystal(const RunConfig& cfg) {
  const Chain chain = build_chain(cfg);
  Json j = header(cfg, "crystal");
  j["n_ions"] = cfg.trap.n_ions;
  j["positions_m"] = vec(chain.crystal.positions);
  j["window"] = {chain.crystal.window.begin, chain.crystal.window.end};
  j["spacing_mean_m"] = chain.crystal.spacing_mean;
  j["spacing_rsd"] = chain.crystal.spacing_rsd;
  j["newton_iterations"] = chain.crystal.iterations;
  j["gradient_norm"] = chain.crystal.gradient_norm;
  const Eigen::VectorXd& w = chain.modes.omega;
  Json modes;
  modes["omega_hz"] = vec(w, 1.0 / two_pi);
  modes["eta"] = vec(chain.modes.eta);
  modes["delta_k_per_m"] = chain.modes.delta_k;
  modes["com_relative_error"] = std::abs(w[0] - cfg.trap.omega_x) / cfg.trap.omega_x;
  modes["spread_fraction"] = (w.maxCoeff() - w.minCoeff()) / cfg.trap.omega_x;
  j["modes"] = modes;
  if (std::holds_alternative<QuarticAxial>(cfg.trap.axial)) {
    TrapSpec harmonic = cfg.trap;
    harmonic.axial = harmonic_matching_spacing(cfg.trap, chain.crystal.window, chain.crystal.spacing_mean);
    const Crystal hc = solve_equilibrium(harmonic, std::nullopt, chain.crystal.window);
    Json h;
    h["omega_z_hz"] = hz(std::get<HarmonicAxial>(harmonic.axial).omega_z);
    h["spacing_mean_m"] = hc.spacing_mean;
    h["spacing_rsd"] = hc.spacing_rsd;
    j["harmonic_matched"] = h;
  }
  CsvWriter csv(cfg.hash, {"mode", "omega_hz", "eta"});
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    csv.cell(static_cast<long long>(k)).cell(hz(w[k])).cell(chain.modes.eta[k]).end_row();
  }
  CsvWriter pos(cfg.hash, {"ion", "position_m"});
  for (Eigen::Index k = 0; k < chain.crystal.positions.size(); ++k) {
    pos.cell(static_cast<long long>(k)).cell(chain.crystal.positions[k]).end_row();
  }
  return {{"crystal.json", dump_json(j)}, {"modes.csv", csv.str()}, {"positions.csv", pos.str()}};
}

std::vector<Artifact> cmd_design(const RunConfig& cfg, const Overrides& o) {
  const PairConfig p = resolve_pair(cfg, o);
  const Chain chain = build_chain(cfg);
  const GateDesign d = design_pair(cfg, chain, p);
  Json j = header(cfg, "design");
  j["design"] = design_json(d);
  CsvWriter csv(cfg.hash, {"segment", "start_s", "end_s", "omega_hz"});
  const SegmentList segs = d.pulse.segments();
  for (std::size_t n = 0; n < segs.size(); ++n) {
    csv.cell(static_cast<long long>(n)).cell(segs.start[n]).cell(segs.end[n]);
    csv.cell(hz(d.pulse.omegas[static_cast<Eigen::Index>(n)])).end_row();
  }
  const std::string tag = label(p.ions);
  return {{"design_" + tag + ".json", dump_json(j)}, {"segments_" + tag + ".csv", csv.str()}};
}

std::vector<Artifact> cmd_suite(const RunConfig& cfg) {
  const auto& pairs = require_pairs(cfg, "suite");
  const Chain chain = build_chain(cfg);
  Json j = header(cfg, "suite");
  Json arr = Json::array();
  CsvWriter csv(cfg.hash, {"ion_i", "ion_j", "n_seg", "tau_s", "mu_hz", "target_sign", "design_infidelity",
                           "max_rabi_hz", "mu_offset_hz", "rescale", "box_nominal", "worst_detuning",
                           "worst_intensity", "worst_duration", "worst_case", "worst_joint"});
  for (const PairConfig& p : pairs) {
    const Evaluated e = evaluate_pair(cfg, chain, p);
    arr.push_back(evaluated_json(e));
    const GateDesign& d = e.nominal;
    csv.cell(static_cast<long long>(p.ions.first)).cell(static_cast<long long>(p.ions.second));
    csv.cell(static_cast<long long>(p.n_seg)).cell(p.tau).cell(hz(p.mu)).cell(static_cast<long long>(d.target_sign));
    csv.cell(d.solution.design_infidelity).cell(hz(d.solution.max_amplitude));
    csv.cell(e.wp ? hz(e.wp->mu_prime - p.mu) : 0.0).cell(e.wp ? e.wp->rescale : 1.0);
    csv.cell(e.box.nominal).cell(e.box.worst_detuning).cell(e.box.worst_intensity).cell(e.box.worst_duration);
    csv.cell(e.box.worst_case).cell(e.box.worst_joint).end_row();
  }
  j["pairs"] = arr;
  return {{"suite.json", dump_json(j)}, {"suite.csv", csv.str()}};
}

std::vector<double> phase_grid(std::size_t n) {
  if (n == 0) return {0.0};
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = two_pi * static_cast<double>(k) / static_cast<double>(n);
  return v;
}

std::vector<Artifact> cmd_scan(const RunConfig& cfg, const Overrides& o) {
  const std::vector<PairConfig> pairs = selected_pairs(cfg, o, "scan");
  const Chain chain = build_chain(cfg);
  const std::vector<double> phases = phase_grid(cfg.scan.box.phase_points);
  Json j = header(cfg, "scan");
  Json arr = Json::array();
  std::vector<Artifact> out;
  for (const PairConfig& p : pairs) {
    const Evaluated e = evaluate_pair(cfg, chain, p);
    const GateDesign& d = e.final_design();
    struct Point {
      ScanParameter axis;
      double value;
    };
    std::vector<Point> points;
    const double ext = cfg.scan.scan_extent;
    const std::size_t n = cfg.scan.scan_points;
    for (double v : linspace(-ext * cfg.scan.box.d_mu, ext * cfg.scan.box.d_mu, n)) points.push_back({ScanParameter::Detuning, v});
    for (double v : linspace(-ext * cfg.scan.box.rel_omega, ext * cfg.scan.box.rel_omega, n)) points.push_back({ScanParameter::Intensity, v});
    for (double v : linspace(-ext * cfg.scan.box.d_tau, ext * cfg.scan.box.d_tau, n)) points.push_back({ScanParameter::Duration, v});
    std::vector<std::vector<double>> inf(points.size());
    parallel_for(points.size(), cfg.threads, [&](std::size_t k) {
      Perturbation pert;
      if (points[k].axis == ScanParameter::Detuning) pert.d_mu = points[k].value;
      if (points[k].axis == ScanParameter::Intensity) pert.rel_omega = points[k].value;
      if (points[k].axis == ScanParameter::Duration) pert.d_tau = points[k].value;
      inf[k] = phase_infidelities(d, pert, phases);
    });
    const std::vector<double> phase_axis = phase_grid(64);
    const std::vector<double> phase_inf = phase_infidelities(d, {}, phase_axis);

    CsvWriter csv(cfg.hash, {"axis", "value", "infidelity_design_phase", "infidelity_worst_phase"});
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double worst = *std::max_element(inf[k].begin(), inf[k].end());
      csv.cell(to_string(points[k].axis)).cell(points[k].value).cell(inf[k].front()).cell(worst).end_row();
    }
    for (std::size_t k = 0; k < phase_axis.size(); ++k) {
      csv.cell(to_string(ScanParameter::MotionalPhase)).cell(phase_axis[k]).cell(phase_inf[k]).cell(phase_inf[k]).end_row();
    }
    out.push_back({"scan_" + label(p.ions) + ".csv", csv.str()});
    arr.push_back(evaluated_json(e));
  }
  j["pairs"] = arr;
  out.insert(out.begin(), {"scan.json", dump_json(j)});
  return out;
}

const char* kind_name(EntryKind k) {
  switch (k) {
    case EntryKind::Infidelity: return "infidelity";
    case EntryKind::Tolerance: return "tolerance";
    case EntryKind::Ratio: return "ratio";
  }
  return "unknown";
}

std::vector<Artifact> cmd_budget(const RunConfig& cfg, const Overrides& o) {
  require_pairs(cfg, "budget");
  std::optional<IonPair> ions = o.pair ? o.pair : cfg.budget.pair;
  PairConfig p;
  if (ions) {
    const PairConfig* found = cfg.find_pair(*ions);
    if (!found) config_error("budget.ions", "pair " + label(*ions) + " is not configured");
    p = *found;
  } else {
    // the longest gate dominates the time-integrated entries
    p = *std::max_element(cfg.pairs.begin(), cfg.pairs.end(),
                          [](const PairConfig& a, const PairConfig& b) { return a.tau < b.tau; });
  }
  const Chain chain = build_chain(cfg);
  const GateDesign d = design_pair(cfg, chain, p);
  const GateParams gate{d.solution.max_amplitude, d.pulse.tau};
  const ErrorBudget b = evaluate_budget(cfg.trap, chain.crystal, chain.modes, cfg.beam, gate, cfg.thermal,
                                        cfg.budget.heating_rate, cfg.budget.kerr_hz);
  Json j = header(cfg, "budget");
  j["ions"] = {p.ions.first, p.ions.second};
  j["gate"] = {{"omega_eff_hz", hz(gate.omega_eff)}, {"tau_s", gate.tau}};
  j["heating_rate_per_s"] = cfg.budget.heating_rate;
  j["kerr_hz"] = vec(cfg.budget.kerr_hz);
  Json in;
  in["eta"] = b.inputs.eta;
  in["n_bar"] = b.inputs.n_bar;
  in["q"] = b.inputs.q;
  in["d_av_m"] = b.inputs.d_av;
  in["omega_x_over_omega_z"] = b.inputs.omega_x_over_z;
  in["n_modes"] = b.inputs.n_modes;
  j["inputs"] = in;
  Json entries = Json::array();
  CsvWriter csv(cfg.hash, {"source", "value"});
  for (const BudgetEntry& e : b.entries) {
    Json row;
    row["source"] = e.source;
    row["formula_id"] = e.formula_id;
    row["kind"] = kind_name(e.kind);
    row["value"] = opt(e.value);
    row["reference_order"] = opt(e.reference_order);
    row["missing"] = e.missing.empty() ? Json(nullptr) : Json(e.missing);
    entries.push_back(row);
    csv.cell(e.source);
    if (e.value) {
      csv.cell(*e.value);
    } else {
      csv.cell(std::string("unavailable"));
    }
    csv.end_row();
  }
  j["entries"] = entries;
  j["warnings"] = b.warnings;
  std::vector<Artifact> out;
  if (cfg.budget.requirements) {
    const std::vector<RequirementRow> rows = requirements_check(*cfg.budget.requirements);
    Json req = Json::array();
    CsvWriter rc(cfg.hash, {"row", "value", "limit", "pass"});
    for (const RequirementRow& r : rows) {
      req.push_back({{"row", r.name}, {"value", r.value}, {"limit", r.limit}, {"pass", r.pass}});
      rc.cell(r.name).cell(r.value).cell(r.limit).cell(static_cast<long long>(r.pass)).end_row();
    }
    j["requirements"] = req;
    out.push_back({"requirements.csv", rc.str()});
  }
  out.insert(out.begin(), {{"budget.json", dump_json(j)}, {"budget.csv", csv.str()}});
  return out;
}

std::vector<Artifact> cmd_oracle(const RunConfig& cfg, std::ostream& log) {
  const OracleSection& s = cfg.oracle;
  ModeData m;
  m.omega = Eigen::VectorXd::Constant(1, s.omega);
  m.eta = Eigen::VectorXd::Constant(1, s.eta);
  m.b = Eigen::MatrixXd::Constant(2, 1, 1.0 / std::sqrt(2.0));
  m.delta_k = cfg.delta_k;
  const std::size_t periods = s.periods_per_segment * s.n_seg;
  const double mu = s.mu_ratio > 0.0 ? s.mu_ratio * s.omega
                                     : s.omega * static_cast<double>(periods) / static_cast<double>(periods + 1);
  const double tau = static_cast<double>(periods) * two_pi / mu;
  const ThermalSpec thermal = ThermalSpec::mean_phonon(s.n_bar);
  const GateDesign d = design_gate(m, {0, 1, s.n_seg, tau, mu, 0.0, 0}, thermal);
  const OracleSystem sys = oracle_system(m, 0, 1, {0});
  OracleConfig oc;
  oc.fock_cutoff = s.fock_cutoff;
  const OracleResult r = thermal_fidelity(sys, d.pulse, oc, thermal, d.target_sign);
  const double fa = analytic_state_fidelity(sys, d.pulse, thermal, d.target_sign);

  Json j = header(cfg, "oracle");
  Json inst;
  inst["omega_hz"] = hz(s.omega);
  inst["eta"] = s.eta;
  inst["n_bar"] = s.n_bar;
  inst["n_seg"] = s.n_seg;
  inst["tau_s"] = tau;
  inst["mu_hz"] = hz(mu);
  inst["target_sign"] = d.target_sign;
  inst["omegas_hz"] = vec(d.pulse.omegas, 1.0 / two_pi);
  j["instance"] = inst;
  Json cmp;
  cmp["fock_cutoff"] = s.fock_cutoff;
  cmp["oracle_fidelity"] = r.fidelity;
  cmp["analytic_fidelity"] = fa;
  cmp["difference"] = r.fidelity - fa;
  cmp["bound"] = 5.0 * std::pow(s.eta, 4) * std::pow(2.0 * s.n_bar + 1.0, 2);
  cmp["step_change"] = r.step_change;
  cmp["top_population"] = r.top_population;
  cmp["thermal_terms"] = r.n_terms;
  cmp["weight_covered"] = r.weight_covered;
  cmp["dt_s"] = r.dt;
  if (s.cutoff_step > 0 && s.fock_cutoff >= s.cutoff_step + 2) {
    OracleConfig lower = oc;
    lower.fock_cutoff = s.fock_cutoff - s.cutoff_step;
    lower.top_population_limit = 1.0;
    try {
      const OracleResult rl = thermal_fidelity(sys, d.pulse, lower, thermal, d.target_sign);
      cmp["cutoff_change"] = std::abs(rl.fidelity - r.fidelity);
    } catch (const Error& e) {
      // too few levels for the thermal weight at the lower cutoff
      cmp["cutoff_change"] = nullptr;
      log << "lower-cutoff comparison skipped: " << e.what() << "\n";
    }
  }
  j["comparison"] = cmp;

  if (!s.rel_omega_asym.empty() || !s.d_mu_asym_tau.empty()) {
    std::vector<double> dw{0.0}, dm{0.0};
    dw.insert(dw.end(), s.rel_omega_asym.begin(), s.rel_omega_asym.end());
    for (double x : s.d_mu_asym_tau) dm.push_back(x / tau);
    const AsymmetrySweep sw = asymmetry_sweep(sys, d.pulse, oc, thermal, d.target_sign, dw, dm, cfg.threads);
    Json a;
    a["baseline_infidelity"] = sw.baseline_infidelity;
    a["exponent_rel_omega"] = sw.exponent_omega;
    a["exponent_d_mu"] = sw.exponent_mu;
    Json pts = Json::array();
    for (const AsymmetryPoint& p : sw.points) {
      pts.push_back({{"rel_omega_asym", p.delta_omega}, {"d_mu_asym_hz", hz(p.delta_mu)}, {"fidelity", p.fidelity}});
    }
    a["points"] = pts;
    j["asymmetry"] = a;
  }

  if (s.carrier_pairs && !cfg.pairs.empty()) {
    const Chain chain = build_chain(cfg);
    Json arr = Json::array();
    for (const PairConfig& p : cfg.pairs) {
      const GateDesign pd = design_pair(cfg, chain, p);
      Json c;
      c["ions"] = {p.ions.first, p.ions.second};
      c["rotation_at_zero"] = carrier_rotation(pd.pulse, 0.0).delta_phi;
      c["threshold_rel_omega"] = carrier_threshold(pd.pulse, s.carrier_target);
      c["target_delta_phi_sq"] = s.carrier_target;
      arr.push_back(c);
    }
    j["carrier"] = arr;
  }
  return {{"oracle.json", dump_json(j)}};
}

std::vector<Artifact> cmd_repeat(const RunConfig& cfg, const Overrides& o) {
  require_pairs(cfg, "repeat");
  std::optional<IonPair> ions = o.pair ? o.pair : cfg.repeat.pair;
  PairConfig p = cfg.pairs.front();
  if (ions) {
    const PairConfig* found = cfg.find_pair(*ions);
    if (!found) config_error("repeat.ions", "pair " + label(*ions) + " is not configured");
    p = *found;
  }
  const Chain chain = build_chain(cfg);
  GateDesign d = design_pair(cfg, chain, p);
  double offset = 0.0;
  if (cfg.repeat.working_point) {
    WorkingPointOptions wo;
    wo.span = cfg.scan.span;
    wo.step = cfg.scan.step;
    wo.box = cfg.scan.box;
    wo.threads = cfg.threads;
    wo.rescale_range = 0.0;
    const WorkingPoint wp = select_working_point(d, wo);
    offset = wp.mu_prime - d.pulse.mu;
    d = wp.design;
  } else {
    d = mean_rescaled(d);
  }
  // repetition needs the angle-calibrated amplitude; a box-tuned amplitude
  // leaves a coherent angle error that adds up quadratically
  RepeatPlan plan;
  plan.m_max = cfg.repeat.m_max;
  plan.contiguous = cfg.repeat.contiguous;
  plan.seed = cfg.seed;
  plan.draws = cfg.repeat.draws;
  plan.max_gap = cfg.repeat.max_gap;
  const RepeatResult r = repeat_infidelity(d, plan, cfg.threads);

  Json j = header(cfg, "repeat");
  j["ions"] = {p.ions.first, p.ions.second};
  j["mu_offset_hz"] = hz(offset);
  j["plan"] = {{"m_max", plan.m_max}, {"contiguous", plan.contiguous}, {"draws", plan.draws}, {"max_gap_s", plan.max_gap}};
  j["fit"] = {{"exponent", r.fit.exponent},
              {"exponent_stderr", r.fit.exponent_stderr},
              {"ci95_low", r.exponent_ci_low},
              {"ci95_high", r.exponent_ci_high},
              {"prefactor", r.fit.prefactor}};
  CsvWriter csv(cfg.hash, {"m", "infidelity", "infidelity_min", "infidelity_max", "max_cross_theta"});
  Json pts = Json::array();
  for (const RepeatPoint& pt : r.points) {
    csv.cell(static_cast<long long>(pt.m)).cell(pt.infidelity).cell(pt.infidelity_min).cell(pt.infidelity_max);
    csv.cell(pt.max_cross_theta).end_row();
    pts.push_back({{"m", pt.m}, {"infidelity", pt.infidelity}, {"max_cross_theta", pt.max_cross_theta}});
  }
  j["points"] = pts;
  return {{"repeat.json", dump_json(j)}, {"repeat.csv", csv.str()}};
}

std::optional<IonPair> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) return std::nullopt;
  try {
    std::size_t used_i = 0, used_j = 0;
    const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
    const long i = std::stol(a, &used_i);
    const long jv = std::stol(b, &used_j);
    if (used_i != a.size() || used_j != b.size() || i < 0 || jv < 0) return std::nullopt;
    return IonPair{static_cast<std::size_t>(i), static_cast<std::size_t>(jv)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<Artifact> run_command(const std::string& command, RunConfig cfg, const Overrides& o, std::ostream& log) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (command == "crystal") return cmd_crystal(cfg);
  if (command == "design") return cmd_design(cfg, o);
  if (command == "suite") return cmd_suite(cfg);
  if (command == "scan") return cmd_scan(cfg, o);
  if (command == "budget") return cmd_budget(cfg, o);
  if (command == "oracle") return cmd_oracle(cfg, log);
  if (command == "repeat") return cmd_repeat(cfg, o);
  throw Error(ErrorKind::ConfigInvalid, "unknown command " + command);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segmented Molmer-Sorensen gate design for trapped-ion chains", kToolName};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1, 1);
  std::string config_path, pair_text;
  std::size_t n_seg = 0;
  double tau = 0.0, mu_hz = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_dir;
  const std::pair<const char*, const char*> help[] = {
      {"crystal", "equilibrium positions and transverse modes"},
      {"design", "pulse design for one ion pair"},
      {"suite", "design, working point and robustness box for every configured pair"},
      {"scan", "one-dimensional sensitivity scans"},
      {"budget", "analytic error budget and requirement check"},
      {"oracle", "truncated-Fock comparison, asymmetry sweep and carrier thresholds"},
      {"repeat", "repeated-gate infidelity scaling"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, text] : help) {
    CLI::App* sc = app.add_subcommand(name, text);
    sc->add_option("--config", config_path, "TOML or JSON configuration")->required();
    sc->add_option("--out", out_dir, "output directory");
    sc->add_option("--pair", pair_text, "ion pair as i,j");
    sc->add_option("--nseg", n_seg, "number of segments")->check(CLI::PositiveNumber);
    sc->add_option("--tau", tau, "gate time, s")->check(CLI::PositiveNumber);
    sc->add_option("--mu", mu_hz, "drive detuning frequency, Hz")->check(CLI::PositiveNumber);
    sc->add_option("--seed", seed, "random seed");
    sc->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    subs.push_back(sc);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  const CLI::App* sc = nullptr;
  for (const CLI::App* s : subs) {
    if (s->parsed()) sc = s;
  }
  const std::string command = sc->get_name();

  Overrides o;
  if (sc->count("--pair")) {
    o.pair = parse_pair(pair_text);
    if (!o.pair) {
      err << "error: --pair expects two indices as i,j\n";
      return 2;
    }
  }
  if (sc->count("--nseg")) o.n_seg = n_seg;
  if (sc->count("--tau")) o.tau = tau;
  if (sc->count("--mu")) o.mu_hz = mu_hz;
  if (sc->count("--seed")) o.seed = seed;
  if (sc->count("--threads")) o.threads = threads;
  if (sc->count("--out")) o.out = out_dir;

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config(config_path);
    const std::string dir = o.out.value_or(cfg.output_dir);
    const std::vector<Artifact> artifacts = run_command(command, cfg, o, err);
    for (const Artifact& a : artifacts) {
      const std::string path = (std::filesystem::path(dir) / a.name).string();
      write_atomic(path, a.content);
      out << path << "\n";
    }
    err << command << " finished in "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace iongate::cli

#include "cli/config.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace iongate::cli {

namespace {

using constants::two_pi;

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ConfigInvalid, where + ": " + what);
}

void insert_json(toml::table& out, const std::string& key, const nlohmann::json& v, const std::string& path);

void push_json(toml::array& out, const nlohmann::json& v, const std::string& path) {
  if (v.is_object()) {
    toml::table t;
    for (auto it = v.begin(); it != v.end(); ++it) insert_json(t, it.key(), it.value(), path + "." + it.key());
    out.push_back(std::move(t));
  } else if (v.is_array()) {
    toml::array a;
    for (const auto& e : v) push_json(a, e, path + "[]");
    out.push_back(std::move(a));
  } else if (v.is_boolean()) {
    out.push_back(v.get<bool>());
  } else if (v.is_number_integer()) {
    out.push_back(v.get<std::int64_t>());
  } else if (v.is_number_float()) {
    out.push_back(v.get<double>());
  } else if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else {
    invalid(path, "null is not a valid value");
  }
}

void insert_json(toml::table& out, const std::string& key, const nlohmann::json& v, const std::string& path) {
  if (v.is_object()) {
    toml::table t;
    for (auto it = v.begin(); it != v.end(); ++it) insert_json(t, it.key(), it.value(), path + "." + it.key());
    out.insert(key, std::move(t));
  } else if (v.is_array()) {
    toml::array a;
    for (const auto& e : v) push_json(a, e, path);
    out.insert(key, std::move(a));
  } else if (v.is_boolean()) {
    out.insert(key, v.get<bool>());
  } else if (v.is_number_integer()) {
    out.insert(key, v.get<std::int64_t>());
  } else if (v.is_number_float()) {
    out.insert(key, v.get<double>());
  } else if (v.is_string()) {
    out.insert(key, v.get<std::string>());
  } else {
    invalid(path, "null is not a valid value");
  }
}

/// Typed access to one table; unknown keys are rejected on construction.
class Reader {
 public:
  Reader(const toml::table& t, std::string path, std::initializer_list<std::string_view> allowed)
      : t_(t), path_(std::move(path)) {
    const std::set<std::string_view> ok(allowed);
    for (auto&& [k, v] : t_) {
      if (!ok.count(k.str())) invalid(where(k.str()), "unknown key");
    }
  }

  bool has(std::string_view key) const { return t_.contains(key); }

  std::optional<double> opt_number(std::string_view key) const {
    const toml::node* n = t_.get(key);
    if (!n) return std::nullopt;
    std::optional<double> v;
    if (n->is_floating_point()) v = n->as_floating_point()->get();
    if (n->is_integer()) v = static_cast<double>(n->as_integer()->get());
    if (!v) invalid(where(key), "expected a number");
    if (!std::isfinite(*v)) invalid(where(key), "must be finite");
    return v;
  }

  double number(std::string_view key) const {
    const auto v = opt_number(key);
    if (!v) invalid(where(key), "missing required field");
    return *v;
  }

  double number(std::string_view key, double fallback) const { return opt_number(key).value_or(fallback); }

  double positive(std::string_view key) const {
    const double v = number(key);
    if (!(v > 0.0)) invalid(where(key), "must be positive");
    return v;
  }

  std::optional<double> opt_positive(std::string_view key) const {
    const auto v = opt_number(key);
    if (v && !(*v > 0.0)) invalid(where(key), "must be positive");
    return v;
  }

  std::optional<std::int64_t> opt_integer(std::string_view key) const {
    const toml::node* n = t_.get(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) invalid(where(key), "expected an integer");
    return n->as_integer()->get();
  }

  std::size_t count(std::string_view key, std::size_t fallback, std::int64_t min = 1) const {
    const auto v = opt_integer(key);
    if (!v) return fallback;
    if (*v < min) invalid(where(key), "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(*v);
  }

  std::size_t required_count(std::string_view key, std::int64_t min = 1) const {
    if (!has(key)) invalid(where(key), "missing required field");
    return count(key, 0, min);
  }

  bool boolean(std::string_view key, bool fallback) const {
    const toml::node* n = t_.get(key);
    if (!n) return fallback;
    if (!n->is_boolean()) invalid(where(key), "expected true or false");
    return n->as_boolean()->get();
  }

  std::string string(std::string_view key, const std::string& fallback) const {
    const toml::node* n = t_.get(key);
    if (!n) return fallback;
    if (!n->is_string()) invalid(where(key), "expected a string");
    return n->as_string()->get();
  }

  const toml::table* table(std::string_view key) const {
    const toml::node* n = t_.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) invalid(where(key), "expected a table");
    return n->as_table();
  }

  const toml::table& required_table(std::string_view key) const {
    const toml::table* t = table(key);
    if (!t) invalid(where(key), "missing required section");
    return *t;
  }

  std::vector<double> numbers(std::string_view key) const {
    const toml::node* n = t_.get(key);
    if (!n) return {};
    if (!n->is_array()) invalid(where(key), "expected a list of numbers");
    std::vector<double> out;
    for (const toml::node& e : *n->as_array()) {
      if (e.is_floating_point()) {
        out.push_back(e.as_floating_point()->get());
      } else if (e.is_integer()) {
        out.push_back(static_cast<double>(e.as_integer()->get()));
      } else {
        invalid(where(key), "expected a list of numbers");
      }
      if (!std::isfinite(out.back())) invalid(where(key), "entries must be finite");
    }
    return out;
  }

  std::optional<IonPair> opt_ions(std::string_view key) const {
    const toml::node* n = t_.get(key);
    if (!n) return std::nullopt;
    const toml::array* a = n->as_array();
    if (!a || a->size() != 2 || !(*a)[0].is_integer() || !(*a)[1].is_integer()) {
      invalid(where(key), "expected two ion indices");
    }
    const std::int64_t i = (*a)[0].as_integer()->get();
    const std::int64_t j = (*a)[1].as_integer()->get();
    if (i < 0 || j < 0 || i == j) invalid(where(key), "ion indices must be distinct and non-negative");
    return IonPair{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
  }

  std::string where(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  const std::string& path() const { return path_; }

 private:
  const toml::table& t_;
  std::string path_;
};

TrapSpec parse_trap(const Reader& top) {
  const Reader r(top.required_table("trap"), "trap",
                 {"n_ions", "mass_amu", "charge_e", "omega_x_hz", "omega_y_hz", "rf_hz", "q_param", "axial"});
  TrapSpec t;
  t.n_ions = r.required_count("n_ions", 2);
  t.mass_kg = r.number("mass_amu", constants::yb171_mass_amu) * constants::atomic_mass_unit;
  t.charge_c = r.number("charge_e", 1.0) * constants::elementary_charge;
  t.omega_x = two_pi * r.positive("omega_x_hz");
  t.omega_y = two_pi * r.positive("omega_y_hz");
  if (const auto rf = r.opt_positive("rf_hz")) t.omega_rf = two_pi * *rf;
  t.q_param = r.opt_positive("q_param");
  const Reader a(r.required_table("axial"), "trap.axial", {"kind", "l0_m", "gamma4", "omega_z_hz"});
  const std::string kind = a.string("kind", "quartic");
  if (kind == "quartic") {
    if (a.has("omega_z_hz")) invalid(a.where("omega_z_hz"), "only valid for a harmonic axial potential");
    t.axial = QuarticAxial{a.positive("l0_m"), a.number("gamma4")};
  } else if (kind == "harmonic") {
    if (a.has("l0_m") || a.has("gamma4")) invalid(a.path(), "l0_m and gamma4 only apply to a quartic potential");
    t.axial = HarmonicAxial{two_pi * a.positive("omega_z_hz")};
  } else {
    invalid(a.where("kind"), "expected \"quartic\" or \"harmonic\"");
  }
  try {
    t.validate();
  } catch (const Error& e) {
    invalid("trap", e.what());
  }
  return t;
}

BeamConfig parse_beam(const Reader& top, double& delta_k) {
  const Reader r(top.required_table("beam"), "beam",
                 {"wavelength_m", "delta_k_per_m", "detuning_hz", "omega_1_hz", "omega_2_hz", "waist_m",
                  "intensity_ratio", "gamma_e_hz", "omega_01_hz", "two_photon_detuning_hz"});
  BeamConfig b;
  b.wavelength_m = r.number("wavelength_m", b.wavelength_m);
  if (!(b.wavelength_m > 0.0)) invalid(r.where("wavelength_m"), "must be positive");
  // counter-propagating Raman beams by default
  delta_k = r.opt_positive("delta_k_per_m").value_or(2.0 * two_pi / b.wavelength_m);
  auto angular = [&](std::string_view key) -> std::optional<double> {
    const auto v = r.opt_positive(key);
    return v ? std::optional<double>(two_pi * *v) : std::nullopt;
  };
  b.detuning = angular("detuning_hz");
  b.omega_1 = angular("omega_1_hz");
  b.omega_2 = angular("omega_2_hz");
  if (b.omega_1.has_value() != b.omega_2.has_value()) invalid("beam", "give both omega_1_hz and omega_2_hz or neither");
  b.waist_m = r.opt_positive("waist_m");
  b.intensity_ratio = r.number("intensity_ratio", 1.0);
  b.gamma_e = angular("gamma_e_hz");
  b.omega_01 = angular("omega_01_hz");
  if (const auto d = r.opt_number("two_photon_detuning_hz")) b.two_photon_detuning = two_pi * *d;
  try {
    b.validate();
  } catch (const Error& e) {
    invalid("beam", e.what());
  }
  return b;
}

ThermalSpec parse_thermal(const Reader& top) {
  const Reader r(top.required_table("thermal"), "thermal", {"n_bar", "temperature_k"});
  if (r.has("n_bar") == r.has("temperature_k")) invalid("thermal", "give exactly one of n_bar and temperature_k");
  const ThermalSpec t =
      r.has("n_bar") ? ThermalSpec::mean_phonon(r.number("n_bar")) : ThermalSpec::temperature(r.number("temperature_k"));
  try {
    t.validate();
  } catch (const Error& e) {
    invalid("thermal", e.what());
  }
  return t;
}

std::vector<PairConfig> parse_pairs(const toml::table& root, const TrapSpec& trap) {
  std::vector<PairConfig> out;
  const toml::node* n = root.get("pairs");
  if (!n) return out;
  const toml::array* arr = n->as_array();
  if (!arr) invalid("pairs", "expected a list of pair tables");
  std::set<IonPair> seen;
  for (std::size_t k = 0; k < arr->size(); ++k) {
    const toml::table* t = (*arr)[k].as_table();
    const std::string path = "pairs[" + std::to_string(k) + "]";
    if (!t) invalid(path, "expected a table");
    const Reader r(*t, path, {"ions", "n_seg", "tau_s", "mu_hz", "mu_ratio"});
    PairConfig p;
    const auto ions = r.opt_ions("ions");
    if (!ions) invalid(r.where("ions"), "missing required field");
    p.ions = *ions;
    if (p.ions.first >= trap.n_ions || p.ions.second >= trap.n_ions) invalid(r.where("ions"), "ion index outside the chain");
    if (!seen.insert(p.ions).second) invalid(r.where("ions"), "pair listed twice");
    p.n_seg = r.required_count("n_seg");
    p.tau = r.positive("tau_s");
    if (r.has("mu_hz") == r.has("mu_ratio")) invalid(path, "give exactly one of mu_hz and mu_ratio");
    p.mu = r.has("mu_hz") ? two_pi * r.positive("mu_hz") : r.positive("mu_ratio") * trap.omega_x;
    out.push_back(p);
  }
  return out;
}

ScanConfig parse_scan(const Reader& top) {
  ScanConfig s;
  const toml::table* t = top.table("scan");
  if (!t) {
    s.span = two_pi * 2e3;
    s.step = two_pi * 50.0;
    return s;
  }
  const Reader r(*t, "scan",
                 {"d_mu_hz", "rel_omega", "d_tau_s", "points_per_axis", "phase_points", "working_point", "span_hz",
                  "step_hz", "scan_points", "scan_extent"});
  s.box.d_mu = two_pi * r.number("d_mu_hz", 1e3);
  s.box.rel_omega = r.number("rel_omega", 0.01);
  s.box.d_tau = r.number("d_tau_s", 0.4e-6);
  if (s.box.d_mu < 0.0 || s.box.rel_omega < 0.0 || s.box.d_tau < 0.0) invalid("scan", "box half-widths must be non-negative");
  s.box.points_per_axis = r.count("points_per_axis", 5);
  s.box.phase_points = r.count("phase_points", 16, 0);
  s.working_point = r.boolean("working_point", true);
  s.span = two_pi * r.number("span_hz", 2e3);
  s.step = two_pi * r.number("step_hz", 50.0);
  if (s.span < 0.0 || !(s.step > 0.0)) invalid("scan", "span_hz must be non-negative and step_hz positive");
  s.scan_points = r.count("scan_points", 41, 2);
  s.scan_extent = r.number("scan_extent", 2.0);
  if (!(s.scan_extent > 0.0)) invalid(r.where("scan_extent"), "must be positive");
  return s;
}

BudgetConfig parse_budget(const Reader& top) {
  BudgetConfig b;
  const toml::table* t = top.table("budget");
  if (!t) return b;
  const Reader r(*t, "budget", {"ions", "heating_rate_per_s", "kerr_hz", "requirements"});
  b.pair = r.opt_ions("ions");
  b.heating_rate = r.number("heating_rate_per_s", 1.0);
  if (b.heating_rate < 0.0) invalid(r.where("heating_rate_per_s"), "must be non-negative");
  if (r.has("kerr_hz")) b.kerr_hz = r.numbers("kerr_hz");
  if (const toml::table* q = r.table("requirements")) {
    const Reader rq(*q, "budget.requirements",
                    {"d_mu_hz", "rel_omega", "d_tau_s", "d_mu_asym_hz", "rel_omega_asym", "phi_m_asym_rad",
                     "phi_s_rad", "d_phi_rad", "d_omega_x_hz", "rel_omega_z"});
    auto hz = [&](std::string_view key) -> std::optional<double> {
      const auto v = rq.opt_number(key);
      return v ? std::optional<double>(two_pi * *v) : std::nullopt;
    };
    ControlErrors e;
    e.d_mu = hz("d_mu_hz");
    e.rel_omega = rq.opt_number("rel_omega");
    e.d_tau = rq.opt_number("d_tau_s");
    e.d_mu_asym = hz("d_mu_asym_hz");
    e.rel_omega_asym = rq.opt_number("rel_omega_asym");
    e.phi_m_asym = rq.opt_number("phi_m_asym_rad");
    e.phi_s = rq.opt_number("phi_s_rad");
    e.d_phi = rq.opt_number("d_phi_rad");
    e.d_omega_x = hz("d_omega_x_hz");
    e.rel_omega_z = rq.opt_number("rel_omega_z");
    b.requirements = e;
  }
  return b;
}

OracleSection parse_oracle(const Reader& top) {
  OracleSection o;
  o.omega = two_pi * 1e6;
  const toml::table* t = top.table("oracle");
  if (!t) return o;
  const Reader r(*t, "oracle",
                 {"omega_hz", "eta", "n_bar", "n_seg", "periods_per_segment", "mu_ratio", "fock_cutoff", "cutoff_step",
                  "rel_omega_asym", "d_mu_asym_tau", "carrier_pairs", "carrier_target"});
  o.omega = two_pi * r.number("omega_hz", 1e6);
  if (!(o.omega > 0.0)) invalid(r.where("omega_hz"), "must be positive");
  o.eta = r.number("eta", o.eta);
  if (!(o.eta > 0.0)) invalid(r.where("eta"), "must be positive");
  o.n_bar = r.number("n_bar", o.n_bar);
  if (o.n_bar < 0.0) invalid(r.where("n_bar"), "must be non-negative");
  o.n_seg = r.count("n_seg", o.n_seg);
  o.periods_per_segment = r.count("periods_per_segment", o.periods_per_segment);
  o.mu_ratio = r.number("mu_ratio", 0.0);
  if (o.mu_ratio < 0.0) invalid(r.where("mu_ratio"), "must be non-negative");
  o.fock_cutoff = r.count("fock_cutoff", o.fock_cutoff, 2);
  o.cutoff_step = r.count("cutoff_step", o.cutoff_step, 0);
  o.rel_omega_asym = r.numbers("rel_omega_asym");
  o.d_mu_asym_tau = r.numbers("d_mu_asym_tau");
  o.carrier_pairs = r.boolean("carrier_pairs", true);
  o.carrier_target = r.number("carrier_target", 1e-3);
  if (!(o.carrier_target > 0.0)) invalid(r.where("carrier_target"), "must be positive");
  return o;
}

RepeatConfig parse_repeat(const Reader& top) {
  RepeatConfig c;
  const toml::table* t = top.table("repeat");
  if (!t) return c;
  const Reader r(*t, "repeat", {"ions", "m_max", "contiguous", "draws", "max_gap_s", "working_point"});
  c.pair = r.opt_ions("ions");
  c.m_max = r.count("m_max", c.m_max);
  c.contiguous = r.boolean("contiguous", c.contiguous);
  c.draws = r.count("draws", c.draws);
  c.max_gap = r.number("max_gap_s", 0.0);
  if (c.max_gap < 0.0) invalid(r.where("max_gap_s"), "must be non-negative");
  c.working_point = r.boolean("working_point", c.working_point);
  return c;
}

}  // namespace

const PairConfig* RunConfig::find_pair(const IonPair& ions) const {
  for (const PairConfig& p : pairs) {
    if (p.ions == ions) return &p;
  }
  return nullptr;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = digits[v & 0xf];
  return s;
}

RunConfig parse_config(std::string_view text, ConfigFormat format, const std::string& source) {
  toml::table root;
  if (format == ConfigFormat::Toml) {
    try {
      root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << e.description() << " (line " << e.source().begin.line << ")";
      invalid(source, msg.str());
    }
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      invalid(source, e.what());
    }
    if (!j.is_object()) invalid(source, "top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) insert_json(root, it.key(), it.value(), it.key());
  }

  const Reader top(root, "",
                   {"seed", "output_dir", "threads", "trap", "beam", "thermal", "design", "pairs", "scan", "budget",
                    "oracle", "repeat"});
  RunConfig c;
  c.hash = hex64(fnv1a64(text));
  const auto seed = top.opt_integer("seed");
  if (seed && *seed < 0) invalid("seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed.value_or(0));
  c.output_dir = top.string("output_dir", c.output_dir);
  c.threads = static_cast<unsigned>(top.count("threads", 1));
  c.trap = parse_trap(top);
  c.beam = parse_beam(top, c.delta_k);
  c.thermal = parse_thermal(top);
  if (const toml::table* d = top.table("design")) {
    const Reader r(*d, "design", {"rabi_cap_hz", "target_sign"});
    c.rabi_cap = two_pi * r.number("rabi_cap_hz", 1e6);
    const std::int64_t s = r.opt_integer("target_sign").value_or(0);
    if (s < -1 || s > 1) invalid(r.where("target_sign"), "must be -1, 0 or 1");
    c.target_sign = static_cast<int>(s);
  } else {
    c.rabi_cap = two_pi * 1e6;
  }
  c.pairs = parse_pairs(root, c.trap);
  c.scan = parse_scan(top);
  c.budget = parse_budget(top);
  c.oracle = parse_oracle(top);
  c.repeat = parse_repeat(top);
  for (const auto& p : {c.budget.pair, c.repeat.pair}) {
    if (p && (p->first >= c.trap.n_ions || p->second >= c.trap.n_ions)) invalid("ions", "ion index outside the chain");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigInvalid, path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return parse_config(text, json ? ConfigFormat::Json : ConfigFormat::Toml, path);
}

}  // namespace iongate::cli

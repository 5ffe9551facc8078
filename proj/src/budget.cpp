#include "iongate/budget.hpp"

#include "iongate/constants.hpp"
#include "iongate/error.hpp"

#include <algorithm>
#include <cmath>

namespace iongate {

namespace {

bool positive(const std::optional<double>& v) { return v && std::isfinite(*v) && *v > 0.0; }

void check_optional(const std::optional<double>& v, const char* name) {
  if (v && !(std::isfinite(*v) && *v > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be positive when given");
  }
}

BudgetEntry entry(std::string source, std::string id, std::optional<double> order,
                  EntryKind kind = EntryKind::Infidelity) {
  BudgetEntry e;
  e.source = std::move(source);
  e.formula_id = std::move(id);
  e.reference_order = order;
  e.kind = kind;
  return e;
}

void require(BudgetEntry& e, bool ok, const std::string& name) {
  if (!ok && e.missing.empty()) e.missing = name;
}

}  // namespace

void BeamConfig::validate() const {
  if (!(std::isfinite(wavelength_m) && wavelength_m > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "wavelength must be positive");
  }
  if (!(std::isfinite(intensity_ratio) && intensity_ratio >= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "strong/weak intensity ratio must be at least 1");
  }
  check_optional(detuning, "single-photon detuning");
  check_optional(omega_1, "omega_1");
  check_optional(omega_2, "omega_2");
  check_optional(waist_m, "beam waist");
  check_optional(gamma_e, "gamma_e");
  check_optional(omega_01, "omega_01");
  if (two_photon_detuning && !std::isfinite(*two_photon_detuning)) {
    throw Error(ErrorKind::InvalidArgument, "two-photon detuning must be finite");
  }
}

double BeamConfig::optical_frequency() const {
  return constants::two_pi * constants::speed_of_light / wavelength_m;
}

std::optional<std::pair<double, double>> raw_rabi(const BeamConfig& beam, double omega_eff) {
  if (beam.omega_1 && beam.omega_2) {
    return std::pair{std::max(*beam.omega_1, *beam.omega_2), std::min(*beam.omega_1, *beam.omega_2)};
  }
  if (!positive(beam.detuning)) return std::nullopt;
  // O1 O2 = 2 Delta Omega_eff with O_strong^2 / O_weak^2 = intensity ratio
  const double product = 2.0 * *beam.detuning * std::abs(omega_eff);
  const double r = std::sqrt(beam.intensity_ratio);
  return std::pair{std::sqrt(product * r), std::sqrt(product / r)};
}

const BudgetEntry& ErrorBudget::at(const std::string& source) const {
  for (const BudgetEntry& e : entries) {
    if (e.source == source) return e;
  }
  throw Error(ErrorKind::InvalidArgument, "no budget entry named " + source);
}

ErrorBudget evaluate_budget(const TrapSpec& trap, const Crystal& crystal, const ModeData& modes,
                            const BeamConfig& beam, const GateParams& gate, const ThermalSpec& thermal,
                            double heating_rate, const std::vector<double>& kerr_hz) {
  beam.validate();
  thermal.validate();
  if (!(std::isfinite(gate.omega_eff) && std::isfinite(gate.tau) && gate.tau > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "gate needs finite Omega_eff and positive tau");
  }
  if (!(std::isfinite(heating_rate) && heating_rate >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "heating rate must be finite and non-negative");
  }
  for (double k : kerr_hz) {
    if (!std::isfinite(k)) throw Error(ErrorKind::InvalidArgument, "Kerr coefficients must be finite");
  }
  if (modes.omega.size() == 0) throw Error(ErrorKind::InvalidArgument, "budget needs at least one mode");

  ErrorBudget b;
  BudgetInputs& in = b.inputs;
  in.eta = modes.eta.cwiseAbs().maxCoeff();
  in.n_bar = 0.5 * (thermal.coth(modes).maxCoeff() - 1.0);
  in.d_av = crystal.spacing_mean;
  in.n_modes = static_cast<std::size_t>(modes.omega.size());
  if (const auto* h = std::get_if<HarmonicAxial>(&trap.axial)) {
    in.omega_x_over_z = trap.omega_x / h->omega_z;
  } else {
    in.omega_x_over_z = linear_stability_ratio(trap.n_ions);
  }
  const std::optional<double> q = trap.mathieu_q();
  in.q = q.value_or(0.0);

  const double w_eff = std::abs(gate.omega_eff);
  const double tau = gate.tau;
  const double thermal_factor = 2.0 * in.n_bar + 1.0;
  const auto rabi = raw_rabi(beam, w_eff);

  {
    BudgetEntry e = entry("micro-motion", "(eta*q*omega_eff/omega_rf)^2", 1e-6);
    require(e, q.has_value() && positive(trap.omega_rf), "omega_rf");
    if (e.missing.empty()) e.value = std::pow(in.eta * *q * w_eff / *trap.omega_rf, 2);
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("rotating-wave approximation", "max(|delta|/omega_01, |omega_1,2|/omega_optical)", 1e-4);
    require(e, beam.two_photon_detuning.has_value(), "two_photon_detuning");
    require(e, positive(beam.omega_01), "omega_01");
    require(e, rabi.has_value(), "single_photon_detuning");
    if (e.missing.empty()) {
      e.value = std::max(std::abs(*beam.two_photon_detuning) / *beam.omega_01,
                         rabi->first / beam.optical_frequency());
    }
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("adiabatic elimination", "|omega_1,2|^2/Delta^2", 1e-7);
    require(e, positive(beam.detuning), "single_photon_detuning");
    require(e, rabi.has_value(), "single_photon_detuning");
    if (e.missing.empty()) e.value = std::pow(rabi->first / *beam.detuning, 2);
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("spontaneous emission", "gamma_e*tau*|omega_1,2|^2/Delta^2", 1e-3);
    require(e, positive(beam.detuning), "single_photon_detuning");
    require(e, rabi.has_value(), "single_photon_detuning");
    require(e, positive(beam.gamma_e), "gamma_e");
    if (e.missing.empty()) e.value = *beam.gamma_e * tau * std::pow(rabi->first / *beam.detuning, 2);
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("higher-order Lamb-Dicke", "eta^4*(2*nbar+1)^2", 1e-4);
    e.value = std::pow(in.eta, 4) * thermal_factor * thermal_factor;
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("adjacent-beam crosstalk", "exp(-d_av^2/(2*sigma^2))", 1e-4);
    require(e, positive(beam.waist_m), "beam_waist");
    require(e, in.d_av > 0.0, "ion spacing");
    if (e.missing.empty()) e.value = std::exp(-in.d_av * in.d_av / (2.0 * *beam.waist_m * *beam.waist_m));
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("perpendicular thermal motion",
                          "eta^2*(2*nbar+1)/(32*pi^2)*(lambda/sigma)^2*(omega_x/omega_z)^2", 1e-4);
    require(e, positive(beam.waist_m), "beam_waist");
    if (e.missing.empty()) {
      e.value = in.eta * in.eta * thermal_factor / (32.0 * constants::pi * constants::pi) *
                std::pow(beam.wavelength_m / *beam.waist_m, 2) * std::pow(in.omega_x_over_z, 2);
    }
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("motional heating bound", "n_modes*heating_rate*tau", 1e-2);
    e.value = static_cast<double>(in.n_modes) * heating_rate * tau;
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("axial frequency drift tolerance", "0.5*sigma/(N*d_av)", 5e-3, EntryKind::Tolerance);
    require(e, positive(beam.waist_m), "beam_waist");
    require(e, in.d_av > 0.0, "ion spacing");
    if (e.missing.empty()) e.value = 0.5 * *beam.waist_m / (static_cast<double>(trap.n_ions) * in.d_av);
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("Kerr shift", "max(kerr_hz)*nbar/1kHz", std::nullopt, EntryKind::Ratio);
    double worst = 0.0;
    for (double k : kerr_hz) worst = std::max(worst, std::abs(k));
    e.value = worst * in.n_bar / kKerrToleranceHz;
    b.entries.push_back(e);
  }
  {
    BudgetEntry e = entry("AC Stark asymmetry", "(1e-4*omega_eff*tau)^2/intensity_ratio", std::nullopt);
    e.value = std::pow(kStarkFraction * w_eff * tau, 2) / beam.intensity_ratio;
    b.entries.push_back(e);
  }

  if (positive(beam.detuning) && rabi && *beam.detuning < 100.0 * rabi->first) {
    b.warnings.push_back("single-photon detuning is less than 100 times the raw Rabi frequency");
  }
  return b;
}

std::vector<RequirementRow> requirements_check(const ControlErrors& errors) {
  const double khz = constants::two_pi * 1e3;
  const double phase = constants::pi / 100.0;
  const std::pair<const char*, std::pair<std::optional<double>, double>> rows[] = {
      {"detuning", {errors.d_mu, khz}},
      {"rabi frequency", {errors.rel_omega, 0.01}},
      {"gate time", {errors.d_tau, 0.4e-6}},
      {"detuning asymmetry", {errors.d_mu_asym, constants::two_pi * 10.0}},
      {"rabi asymmetry", {errors.rel_omega_asym, 2e-4}},
      {"motional phase asymmetry", {errors.phi_m_asym, phase}},
      {"spin phase", {errors.phi_s, phase}},
      {"laser phase fluctuation", {errors.d_phi, phase}},
      {"transverse trap frequency", {errors.d_omega_x, khz}},
      {"axial trap frequency", {errors.rel_omega_z, 5e-3}},
  };
  std::vector<RequirementRow> out;
  for (const auto& [name, vl] : rows) {
    const auto& [value, limit] = vl;
    if (!value) throw Error(ErrorKind::MissingValue, std::string("no value for the ") + name + " row");
    if (!std::isfinite(*value)) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be finite");
    out.push_back({name, *value, limit, std::abs(*value) < limit});
  }
  return out;
}

double motional_phase_imbalance_infidelity(const GateDesign& design, double delta_phi_m) {
  if (!(std::abs(delta_phi_m) <= 0.2)) {
    throw Error(ErrorKind::InvalidArgument, "motional phase imbalance must lie within 0.2 rad");
  }
  Perturbation p;
  p.d_phi_m = delta_phi_m;
  return perturbed_infidelity(design, p);
}

ImbalanceFit motional_phase_imbalance_fit(const GateDesign& design, const std::vector<double>& delta_phi) {
  ImbalanceFit f;
  f.baseline = motional_phase_imbalance_infidelity(design, 0.0);
  f.delta_phi = delta_phi;
  std::vector<double> x, excess;
  for (double d : delta_phi) {
    const double v = motional_phase_imbalance_infidelity(design, d);
    f.infidelity.push_back(v);
    x.push_back(std::abs(d));
    excess.push_back(v - f.baseline);
  }
  f.fit = fit_power_law(x, excess);
  return f;
}

}  // namespace iongate

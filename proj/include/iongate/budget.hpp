#pragma once

#include "iongate/crystal.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/fit.hpp"
#include "iongate/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iongate {

/// Raman beam parameters. Unset optionals make the entries that need them
/// unavailable instead of zero.
struct BeamConfig {
  double wavelength_m = 355e-9;
  std::optional<double> detuning;             // Delta, rad/s
  std::optional<double> omega_1;              // raw single-photon Rabi, rad/s
  std::optional<double> omega_2;              // rad/s
  std::optional<double> waist_m;              // sigma
  double intensity_ratio = 1.0;               // strong / weak
  std::optional<double> gamma_e;              // rad/s
  std::optional<double> omega_01;             // rad/s
  std::optional<double> two_photon_detuning;  // delta, rad/s

  void validate() const;
  /// Optical angular frequency of the beams.
  double optical_frequency() const;
};

/// Raw Rabi frequencies (strong, weak) producing omega_eff = O1 O2 / 2 Delta.
/// Explicit values in the config take precedence.
std::optional<std::pair<double, double>> raw_rabi(const BeamConfig& beam, double omega_eff);

struct GateParams {
  double omega_eff = 0.0;  // largest |Omega_eff|, rad/s
  double tau = 0.0;        // s
};

enum class EntryKind { Infidelity, Tolerance, Ratio };

struct BudgetEntry {
  std::string source;
  std::string formula_id;
  EntryKind kind = EntryKind::Infidelity;
  std::optional<double> value;   // empty when a parameter is missing
  std::optional<double> reference_order;
  std::string missing;           // names the missing parameter
};

struct BudgetInputs {
  double eta = 0.0;
  double n_bar = 0.0;
  double q = 0.0;
  double d_av = 0.0;
  double omega_x_over_z = 0.0;
  std::size_t n_modes = 0;
};

struct ErrorBudget {
  std::vector<BudgetEntry> entries;  // Table-ordered rows first
  BudgetInputs inputs;
  std::vector<std::string> warnings;

  const BudgetEntry& at(const std::string& source) const;
};

/// Relative differential AC Stark shift per unit Omega_eff for equal beams.
inline constexpr double kStarkFraction = 1e-4;

/// Default mode-mode Kerr coefficients, Hz per phonon.
inline const std::vector<double> kDefaultKerrHz{0.14, 0.02};

/// Detuning tolerance used for the Kerr check, Hz.
inline constexpr double kKerrToleranceHz = 1e3;

ErrorBudget evaluate_budget(const TrapSpec& trap, const Crystal& crystal, const ModeData& modes,
                            const BeamConfig& beam, const GateParams& gate, const ThermalSpec& thermal,
                            double heating_rate, const std::vector<double>& kerr_hz = kDefaultKerrHz);

/// Control errors in SI units (rad/s, s, rad, relative).
struct ControlErrors {
  std::optional<double> d_mu;
  std::optional<double> rel_omega;
  std::optional<double> d_tau;
  std::optional<double> d_mu_asym;
  std::optional<double> rel_omega_asym;
  std::optional<double> phi_m_asym;
  std::optional<double> phi_s;
  std::optional<double> d_phi;
  std::optional<double> d_omega_x;
  std::optional<double> rel_omega_z;
};

struct RequirementRow {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// One row per restriction; raises MissingValue when any value is unset.
std::vector<RequirementRow> requirements_check(const ControlErrors& errors);

/// Exact infidelity with phi_m_i = +d/2 and phi_m_j = -d/2 on the design.
double motional_phase_imbalance_infidelity(const GateDesign& design, double delta_phi_m);

struct ImbalanceFit {
  double baseline = 0.0;
  std::vector<double> delta_phi;
  std::vector<double> infidelity;
  PowerFit fit;  // excess infidelity over the baseline
};

ImbalanceFit motional_phase_imbalance_fit(const GateDesign& design, const std::vector<double>& delta_phi);

}  // namespace iongate

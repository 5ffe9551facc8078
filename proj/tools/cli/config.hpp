#pragma once

#include "iongate/budget.hpp"
#include "iongate/crystal.hpp"
#include "iongate/fidelity.hpp"
#include "iongate/optimizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iongate::cli {

using IonPair = std::pair<std::size_t, std::size_t>;

struct PairConfig {
  IonPair ions;
  std::size_t n_seg = 0;
  double tau = 0.0;  // s
  double mu = 0.0;   // rad/s
};

struct ScanConfig {
  BoxSpec box = BoxSpec::requirements();
  bool working_point = true;
  double span = 0.0;  // rad/s
  double step = 0.0;  // rad/s
  std::size_t scan_points = 41;
  double scan_extent = 2.0;  // scan half-width in units of the box half-width
};

struct BudgetConfig {
  std::optional<IonPair> pair;  // defaults to the longest configured gate
  double heating_rate = 1.0;    // quanta/s
  std::vector<double> kerr_hz = kDefaultKerrHz;
  std::optional<ControlErrors> requirements;
};

struct OracleSection {
  double omega = 0.0;  // rad/s
  double eta = 0.05;
  double n_bar = 0.0;
  std::size_t n_seg = 1;
  std::size_t periods_per_segment = 21;
  double mu_ratio = 0.0;  // 0 picks N/(N+1)
  std::size_t fock_cutoff = 20;
  std::size_t cutoff_step = 4;
  std::vector<double> rel_omega_asym;  // sweep values besides 0
  std::vector<double> d_mu_asym_tau;   // dimensionless delta_mu_asym * tau values besides 0
  bool carrier_pairs = true;
  double carrier_target = 1e-3;
};

struct RepeatConfig {
  std::optional<IonPair> pair;  // defaults to the first configured pair
  std::size_t m_max = 20;
  bool contiguous = false;
  std::size_t draws = 16;
  double max_gap = 0.0;  // s
  bool working_point = true;
};

struct RunConfig {
  TrapSpec trap;
  double delta_k = 0.0;  // 1/m
  BeamConfig beam;
  ThermalSpec thermal;
  double rabi_cap = 0.0;  // rad/s
  int target_sign = 0;
  std::vector<PairConfig> pairs;
  ScanConfig scan;
  BudgetConfig budget;
  OracleSection oracle;
  RepeatConfig repeat;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string hash;  // FNV-1a of the config bytes, hex

  const PairConfig* find_pair(const IonPair& ions) const;
};

enum class ConfigFormat { Toml, Json };

/// Parses and validates a configuration; every failure raises ConfigInvalid.
RunConfig parse_config(std::string_view text, ConfigFormat format, const std::string& source = "config");

/// Reads a file; the format follows the extension (.json, otherwise TOML).
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace iongate::cli

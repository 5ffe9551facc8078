#pragma once

#include "cli/config.hpp"
#include "cli/report.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iongate::cli {

/// Command-line values that take precedence over the config.
struct Overrides {
  std::optional<IonPair> pair;
  std::optional<std::size_t> n_seg;
  std::optional<double> tau;    // s
  std::optional<double> mu_hz;  // Hz
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

inline const std::vector<std::string> kCommands{"crystal", "design", "suite", "scan", "budget", "oracle", "repeat"};

/// Runs one subcommand and returns its artifacts without touching the disk.
std::vector<Artifact> run_command(const std::string& command, RunConfig config, const Overrides& overrides,
                                  std::ostream& log);

/// Full command-line entry point. Returns 0 on success, 1 on a domain error
/// and 2 on a configuration or usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iongate::cli

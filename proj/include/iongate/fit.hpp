#pragma once

#include <vector>

namespace iongate {

/// Least-squares line through (log x, log y): y ~ prefactor * x^exponent.
struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double exponent_stderr = 0.0;
  std::size_t points = 0;
};

/// Points with non-positive x or y are skipped; fewer than two usable points
/// raise InvalidArgument.
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& values);

}  // namespace iongate

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <complex>
#include <functional>
#include <vector>

namespace testsupport {

// Adaptive Gauss-Kronrod over [a, b], split at the given breakpoints.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        const std::vector<double>& breaks = {}) {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> pts{a};
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  double sum = 0.0;
  for (std::size_t n = 0; n + 1 < pts.size(); ++n) {
    sum += gauss_kronrod<double, 61>::integrate(f, pts[n], pts[n + 1], 8, 1e-13);
  }
  return sum;
}

inline std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& f,
                                              double a, double b,
                                              const std::vector<double>& breaks = {}) {
  const double re = integrate([&](double t) { return f(t).real(); }, a, b, breaks);
  const double im = integrate([&](double t) { return f(t).imag(); }, a, b, breaks);
  return {re, im};
}

}  // namespace testsupport

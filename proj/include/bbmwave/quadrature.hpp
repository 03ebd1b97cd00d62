#pragma once

#include <functional>
#include <limits>
#include <span>

namespace bbmwave::quadrature {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_intervals = 4000;
  /// Length scale of the exponential map used on infinite ends:
  /// x = a - scale * log(w), w in (0, 1].
  double tail_scale = 1.0;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  bool converged = true;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 15-point Gauss-Kronrod integration of f over [a, b].
/// Either end may be infinite. Breakpoints inside (a, b), if any, seed the
/// initial partition so narrow features are never skipped.
Result integrate(const Integrand& f, double a, double b, const Options& opts = {},
                 std::span<const double> breakpoints = {});

}  // namespace bbmwave::quadrature

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/sum.hpp"

namespace bbmwave::sim {
namespace {

double normal_cdf_diff(double lo, double hi) {
  constexpr double r = std::numbers::sqrt2;
  if (lo >= 0.0) return 0.5 * (std::erfc(lo / r) - std::erfc(hi / r));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi / r) - std::erfc(-lo / r));
  return 1.0 - 0.5 * (std::erfc(-lo / r) + std::erfc(hi / r));
}

// Expected number of particles a single particle at x leaves after one step.
double offspring_mean(const RateFamily& rates, double dt, double x) {
  const double b = rates.birth(x);
  const double d = rates.death(x);
  const double total = b + d;
  if (total <= 0.0) return 1.0;
  return 1.0 - std::expm1(-total * dt) * (b - d) / total;
}

}  // namespace

double scheme_moment(double rho, const RateFamily& rates, double dt, double t, double x0, double a,
                     double b, const SchemeMomentOptions& opts) {
  if (!(dt > 0.0 && t > 0.0)) throw std::invalid_argument("scheme_moment: dt and t must be > 0");
  if (!(a < b)) return 0.0;
  const auto steps = static_cast<std::int64_t>(std::llround(t / dt));
  if (steps < 1) throw std::invalid_argument("scheme_moment: t shorter than one step");
  const double sigma = std::sqrt(dt);
  const double shift = rho * dt;
  const double m0 = offspring_mean(rates, dt, x0);

  if (steps == 1) {
    return m0 * normal_cdf_diff((a - x0 + shift) / sigma, (b - x0 + shift) / sigma);
  }

  // Support of the first-moment density: mean x0 + beta s^2 / 2 - rho s, sd sqrt(s).
  const double beta = rates.beta();
  double lo_mean = std::min(x0, x0 + beta * t * t / 2.0 - rho * t);
  double hi_mean = std::max(x0, x0 + beta * t * t / 2.0 - rho * t);
  if (beta > 0.0 && rho / beta < t) lo_mean = std::min(lo_mean, x0 - rho * rho / (2.0 * beta));
  const double pad = 10.0 * std::sqrt(t) + 2.0;
  const double h = opts.grid_step;
  const double grid_lo = lo_mean - pad;
  const auto m = static_cast<std::int64_t>(std::ceil((hi_mean + pad - grid_lo) / h)) + 1;
  const auto w = static_cast<std::int64_t>(std::ceil(opts.kernel_half_width * sigma / h));

  std::vector<double> kernel(static_cast<std::size_t>(2 * w + 1));
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  for (std::int64_t o = -w; o <= w; ++o) {
    const double z = (static_cast<double>(o) * h + shift) / sigma;
    kernel[static_cast<std::size_t>(o + w)] = h * norm * std::exp(-0.5 * z * z);
  }
  std::vector<double> mult(static_cast<std::size_t>(m));
  std::vector<double> u(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j < m; ++j) {
    const double y = grid_lo + static_cast<double>(j) * h;
    mult[static_cast<std::size_t>(j)] = offspring_mean(rates, dt, y);
    const double z = (y - x0 + shift) / sigma;
    u[static_cast<std::size_t>(j)] = m0 * norm * std::exp(-0.5 * z * z);
  }

  std::vector<double> weighted(u.size());
  std::vector<double> next(u.size());
  for (std::int64_t k = 1; k + 1 < steps; ++k) {
    for (std::size_t j = 0; j < u.size(); ++j) weighted[j] = u[j] * mult[j];
#pragma omp parallel for schedule(static) if (opts.parallel)
    for (std::int64_t j = 0; j < m; ++j) {
      const std::int64_t o_lo = std::max(-w, j - (m - 1));
      const std::int64_t o_hi = std::min(w, j);
      double s = 0.0;
      for (std::int64_t o = o_lo; o <= o_hi; ++o) {
        s += kernel[static_cast<std::size_t>(o + w)] * weighted[static_cast<std::size_t>(j - o)];
      }
      next[static_cast<std::size_t>(j)] = s;
    }
    u.swap(next);
  }

  // Last step in closed form: Gaussian mass of [a, b] from every grid point.
  CompensatedSum total;
  for (std::int64_t j = 0; j < m; ++j) {
    const double x = grid_lo + static_cast<double>(j) * h;
    const double mass = normal_cdf_diff((a - x + shift) / sigma, (b - x + shift) / sigma);
    total.add(h * u[static_cast<std::size_t>(j)] * mult[static_cast<std::size_t>(j)] * mass);
  }
  return total.value();
}

}  // namespace bbmwave::sim

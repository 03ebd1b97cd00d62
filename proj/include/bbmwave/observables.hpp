#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/wave_theory.hpp"

namespace bbmwave::obs {

/// Closed interval [lo, hi]; either end may be infinite.
struct IntervalQuery {
  double lo;
  double hi;
  void validate() const;
};

struct ObservableRow {
  double time = 0.0;
  std::size_t n_total = 0;
  std::size_t n_interval = 0;
  std::optional<double> y_stat;  // empty when the model has no edges (beta = 0)
  std::optional<double> z_stat;
  std::optional<double> max_pos;
  std::optional<double> min_pos;
};

struct WeightedSample {
  std::vector<double> points;
  std::vector<double> weights;
};

std::size_t count_interval(const sim::PopulationState& state, const IntervalQuery& q);

/// Sum of e^{rho x} over alive particles, compensated, in id order.
/// Throws std::overflow_error if a term or the sum is not representable.
double stat_Y(const sim::PopulationState& state, const theory::ModelParams& params);

/// Sum of e^{rho x} Ai((2 beta)^{1/3} (L - x) + gamma_1) over particles below L.
/// Particles whose Ai argument lies past the Airy window contribute nothing;
/// the omitted terms are below e^{rho L} * 1e-74 each.
double stat_Z(const sim::PopulationState& state, const theory::ModelParams& params);

/// Points x sqrt(beta / rho) with uniform weights.
WeightedSample empirical_zeta(const sim::PopulationState& state, const theory::ModelParams& params);

/// Points (2 beta)^{1/3} (L - x) with weights e^{rho x} / Y.
WeightedSample empirical_xi(const sim::PopulationState& state, const theory::ModelParams& params);

/// Sup distance between the weighted empirical CDF and `cdf`, checked on both
/// sides of every atom.
double ks_distance(const WeightedSample& sample, const std::function<double(double)>& cdf);

/// (n_interval / n_total) divided by the mass of profile_f on q cap (-inf, L*].
double ratio_Dn(const sim::PopulationState& state, const theory::ModelParams& params,
                const IntervalQuery& q);

/// Same ratio with the profile mass of q supplied by the caller, for loops
/// that evaluate many snapshots against one interval.
double ratio_Dn(const sim::PopulationState& state, const IntervalQuery& q, double f_mass);

/// (max, min) position, or nothing for an empty population.
std::optional<std::pair<double, double>> extremes(const sim::PopulationState& state);

/// One row of every statistic above. `params` may be absent (no Y or Z then).
ObservableRow observe(const sim::PopulationState& state,
                      const std::optional<theory::ModelParams>& params, const IntervalQuery& q);

double standard_normal_cdf(double x);

}  // namespace bbmwave::obs

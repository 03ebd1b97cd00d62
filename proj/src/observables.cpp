#include "bbmwave/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bbmwave/airy.hpp"
#include "bbmwave/sum.hpp"

namespace bbmwave::obs {
namespace {

// Alive particles in id order. The simulator already keeps that order, so
// this only sorts states assembled by hand.
std::vector<const sim::Particle*> by_id(const sim::PopulationState& state) {
  std::vector<const sim::Particle*> out;
  out.reserve(state.alive.size());
  for (const auto& p : state.alive) out.push_back(&p);
  const bool sorted = std::is_sorted(out.begin(), out.end(),
                                     [](auto* a, auto* b) { return a->id < b->id; });
  if (!sorted) {
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  }
  return out;
}

void require_nonempty(const sim::PopulationState& state, const char* who) {
  if (state.alive.empty()) throw std::domain_error(std::string(who) + ": empty population");
}

}  // namespace

void IntervalQuery::validate() const {
  if (std::isnan(lo) || std::isnan(hi) || !(lo < hi)) {
    throw std::invalid_argument("interval: requires lo < hi");
  }
}

std::size_t count_interval(const sim::PopulationState& state, const IntervalQuery& q) {
  return static_cast<std::size_t>(
      std::count_if(state.alive.begin(), state.alive.end(),
                    [&](const sim::Particle& p) { return p.position >= q.lo && p.position <= q.hi; }));
}

double stat_Y(const sim::PopulationState& state, const theory::ModelParams& params) {
  const double max_exponent = std::log(std::numeric_limits<double>::max());
  CompensatedSum sum;
  for (const auto* p : by_id(state)) {
    const double e = params.rho * p->position;
    if (e > max_exponent) throw std::overflow_error("stat_Y: e^{rho x} overflows");
    sum.add(std::exp(e));
  }
  const double v = sum.value();
  if (!std::isfinite(v)) throw std::overflow_error("stat_Y: sum overflows");
  return v;
}

double stat_Z(const sim::PopulationState& state, const theory::ModelParams& params) {
  const auto e = theory::edges(params);
  const double k = std::cbrt(2.0 * params.beta);
  const double g1 = airy::gamma1();
  const double max_exponent = std::log(std::numeric_limits<double>::max());
  CompensatedSum sum;
  for (const auto* p : by_id(state)) {
    if (!(p->position < e.l_right)) continue;
    const double arg = k * (e.l_right - p->position) + g1;
    if (arg > airy::kWindow) continue;
    const double ex = params.rho * p->position;
    if (ex > max_exponent) throw std::overflow_error("stat_Z: e^{rho x} overflows");
    sum.add(std::exp(ex) * airy::ai(arg));
  }
  const double v = sum.value();
  if (!std::isfinite(v)) throw std::overflow_error("stat_Z: sum overflows");
  return v;
}

WeightedSample empirical_zeta(const sim::PopulationState& state, const theory::ModelParams& params) {
  require_nonempty(state, "empirical_zeta");
  const double scale = std::sqrt(params.beta / params.rho);
  const auto ps = by_id(state);
  WeightedSample s;
  s.points.reserve(ps.size());
  for (const auto* p : ps) s.points.push_back(p->position * scale);
  s.weights.assign(ps.size(), 1.0 / static_cast<double>(ps.size()));
  return s;
}

WeightedSample empirical_xi(const sim::PopulationState& state, const theory::ModelParams& params) {
  require_nonempty(state, "empirical_xi");
  const auto e = theory::edges(params);
  const double k = std::cbrt(2.0 * params.beta);
  const auto ps = by_id(state);
  double x_max = -std::numeric_limits<double>::infinity();
  for (const auto* p : ps) x_max = std::max(x_max, p->position);
  // Weights relative to the right-most particle, then normalised.
  WeightedSample s;
  CompensatedSum total;
  for (const auto* p : ps) {
    s.points.push_back(k * (e.l_right - p->position));
    const double w = std::exp(params.rho * (p->position - x_max));
    s.weights.push_back(w);
    total.add(w);
  }
  const double z = total.value();
  for (double& w : s.weights) w /= z;
  return s;
}

double ks_distance(const WeightedSample& sample, const std::function<double(double)>& cdf) {
  if (sample.points.size() != sample.weights.size()) {
    throw std::invalid_argument("ks_distance: points and weights differ in length");
  }
  const std::size_t n = sample.points.size();
  if (n == 0) return 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample.points[a] < sample.points[b]; });
  double d = 0.0;
  CompensatedSum below;
  std::size_t i = 0;
  while (i < n) {
    const double x = sample.points[order[i]];
    const double f_left = below.value();
    while (i < n && sample.points[order[i]] == x) below.add(sample.weights[order[i++]]);
    const double f_right = std::min(1.0, below.value());
    const double c = cdf(x);
    d = std::max({d, std::fabs(f_left - c), std::fabs(f_right - c)});
  }
  return d;
}

double ratio_Dn(const sim::PopulationState& state, const theory::ModelParams& params,
                const IntervalQuery& q) {
  require_nonempty(state, "ratio_Dn");
  q.validate();
  const double l_star = theory::edges(params).l_star;
  if (!(q.lo < l_star)) throw std::domain_error("ratio_Dn: interval lies above L*, zero denominator");
  const double mass = theory::profile_f_mass(params, q.lo, q.hi);
  if (!(mass > 0.0)) throw std::domain_error("ratio_Dn: zero denominator");
  const double frac =
      static_cast<double>(count_interval(state, q)) / static_cast<double>(state.alive.size());
  return frac / mass;
}

double ratio_Dn(const sim::PopulationState& state, const IntervalQuery& q, double f_mass) {
  require_nonempty(state, "ratio_Dn");
  if (!(f_mass > 0.0)) throw std::domain_error("ratio_Dn: zero denominator");
  const double frac =
      static_cast<double>(count_interval(state, q)) / static_cast<double>(state.alive.size());
  return frac / f_mass;
}

std::optional<std::pair<double, double>> extremes(const sim::PopulationState& state) {
  if (state.alive.empty()) return std::nullopt;
  auto [lo, hi] = std::minmax_element(
      state.alive.begin(), state.alive.end(),
      [](const sim::Particle& a, const sim::Particle& b) { return a.position < b.position; });
  return std::make_pair(hi->position, lo->position);
}

ObservableRow observe(const sim::PopulationState& state,
                      const std::optional<theory::ModelParams>& params, const IntervalQuery& q) {
  ObservableRow row;
  row.time = state.time;
  row.n_total = state.alive.size();
  row.n_interval = count_interval(state, q);
  if (params) {
    row.y_stat = stat_Y(state, *params);
    row.z_stat = stat_Z(state, *params);
  }
  if (auto ext = extremes(state)) {
    row.max_pos = ext->first;
    row.min_pos = ext->second;
  }
  return row;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace bbmwave::obs

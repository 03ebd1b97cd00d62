#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bbmwave/philox.hpp"
#include "bbmwave/wave_theory.hpp"

namespace bbmwave::sim {

/// Birth and death rates as functions of position. The canonical family
/// b = 1 + max(beta x, 0), d = 1 + max(-beta x, 0) has a branch-free fast path.
class RateFamily {
 public:
  static RateFamily canonical(double beta);
  /// Arbitrary rates. `beta` and `alpha` are the witnesses checked by validate().
  static RateFamily custom(std::function<double(double)> birth, std::function<double(double)> death,
                           double beta, double alpha);
  /// Position-independent rates; handy for controls and unit tests.
  static RateFamily constant(double birth, double death);

  double birth(double x) const {
    return canonical_ ? 1.0 + std::max(beta_ * x, 0.0) : birth_(x);
  }
  double death(double x) const {
    return canonical_ ? 1.0 + std::max(-beta_ * x, 0.0) : death_(x);
  }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  bool is_canonical() const { return canonical_; }

  /// Checks b - d = beta x, d >= alpha and b <= 1/alpha (for x <= 1/beta) on
  /// a 1000-point grid over [lo, hi]. Throws std::invalid_argument on failure.
  void validate(double lo, double hi) const;

  /// Largest b + d over a 1000-point grid on [lo, hi].
  double sup_total_rate(double lo, double hi) const;

 private:
  bool canonical_ = true;
  double beta_ = 0.0;
  double alpha_ = 0.5;
  std::function<double(double)> birth_;
  std::function<double(double)> death_;
};

enum class Status : std::uint8_t { alive, died, split, absorbed };

struct Particle {
  std::uint64_t id = 0;
  std::int64_t parent_id = -1;  // -1 for particles present at time 0
  double position = 0.0;
  double born_at = 0.0;
  Status status = Status::alive;
};

struct PopulationState {
  double time = 0.0;
  std::uint64_t step = 0;
  std::vector<Particle> alive;  // always sorted by id
  std::vector<std::pair<double, std::uint64_t>> cumulative_absorbed;
  std::uint64_t next_id = 0;
  std::uint64_t splits = 0;
  std::uint64_t deaths = 0;
  std::uint64_t absorptions = 0;
  std::uint64_t particle_steps = 0;
  /// Z and Y realised by initial_airy; empty otherwise.
  std::optional<double> initial_z;
  std::optional<double> initial_y;
};

/// Raised when a replicate outgrows its caps. Carries the simulated time.
class ExplosionError : public std::runtime_error {
 public:
  ExplosionError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct SimConfig {
  double rho = 0.0;
  double beta = 0.0;
  RateFamily rates = RateFamily::canonical(0.0);
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> snapshot_times;
  std::optional<double> barrier;
  std::size_t max_particles = 1'000'000;
  std::uint64_t max_particle_steps = 10'000'000;
  std::uint64_t seed = 0;

  /// Builds and validates a config; see validate().
  static SimConfig make(double rho, const RateFamily& rates, double dt, double t_end,
                        std::vector<double> snapshot_times);

  /// Working window for the rate checks: [L-bar - 5, L + 5] when beta > 0,
  /// otherwise [-10, 10].
  std::pair<double, double> working_window() const;

  /// Throws std::invalid_argument unless dt > 0, dt * sup(b + d) <= 0.05 on
  /// the working window, snapshot times are sorted within [0, t_end] and the
  /// caps are positive.
  void validate() const;

  std::uint64_t total_steps() const;
  std::uint64_t step_of(double t) const;
};

/// One time step; identical results from both kernels.
void step_serial(PopulationState& state, const SimConfig& config, const rng::Stream& stream);
void step_parallel(PopulationState& state, const SimConfig& config, const rng::Stream& stream);

/// Populations below this size are stepped serially by run_replicate.
inline constexpr std::size_t kParallelStepThreshold = 8192;

struct Snapshot {
  double time;
  PopulationState state;
};

using SnapshotObserver = std::function<void(const PopulationState&)>;

/// Evolves `initial` to t_end and hands every configured snapshot to the
/// observer. Throws ExplosionError when a cap is hit.
void run_replicate(const SimConfig& config, PopulationState initial, std::uint64_t seed,
                   const SnapshotObserver& on_snapshot);

/// Same, collecting full snapshot copies.
std::vector<Snapshot> run_replicate(const SimConfig& config, const PopulationState& initial,
                                    std::uint64_t seed);

PopulationState initial_single(double x);

/// Particles at L - (2 beta)^{-1/3} y with y drawn from the right-edge profile,
/// added until Z reaches (beta^{1/3} / rho^3) e^{rho L}; draws that would push Z
/// past twice that are discarded.
PopulationState initial_airy(const theory::ModelParams& params, std::uint64_t seed,
                             std::size_t max_particles);

/// Worker count: BBMWAVE_WORKERS if set, else `requested` if positive, else
/// the OpenMP default.
int resolve_workers(int requested = 0);

/// Replicate seed for index i.
inline std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t index) {
  return base_seed + static_cast<std::uint64_t>(index);
}

namespace detail {
void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& body);
}

/// Runs fn(index, seed) for every replicate on `workers` threads and returns
/// results in index order, independent of scheduling.
template <class Fn>
auto run_ensemble(std::size_t replicates, std::uint64_t base_seed, int workers, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}, std::uint64_t{}))> {
  using T = decltype(fn(std::size_t{}, std::uint64_t{}));
  std::vector<std::optional<T>> slots(replicates);
  detail::parallel_for_indexed(replicates, workers, [&](std::size_t i) {
    slots[i].emplace(fn(i, replicate_seed(base_seed, i)));
  });
  std::vector<T> out;
  out.reserve(replicates);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Exact expected count in [a, b] at time t for the discretised scheme
/// started from one particle at x0 (no barrier), computed by propagating the
/// first-moment density on a fine grid. Lets the O(dt) scheme bias be measured
/// without Monte Carlo noise.
struct SchemeMomentOptions {
  double grid_step = 0.005;
  double kernel_half_width = 10.0;  // in units of sqrt(dt)
  bool parallel = true;
};
double scheme_moment(double rho, const RateFamily& rates, double dt, double t, double x0, double a,
                     double b, const SchemeMomentOptions& opts = {});

}  // namespace bbmwave::sim

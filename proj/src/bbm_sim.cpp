#include "bbmwave/bbm_sim.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>

#include "bbmwave/airy.hpp"
#include "bbmwave/sum.hpp"

namespace bbmwave::sim {
namespace {

constexpr int kGridPoints = 1000;

enum class Kind : std::uint8_t { move, split, die };

struct Outcome {
  double x;
  Kind kind;
  bool absorbed;
};

// Fate of one particle over one step. A pure function of the particle, the
// config and the stream address, so any kernel reproduces it exactly.
Outcome advance(const Particle& p, const SimConfig& c, const rng::Stream& s, std::uint32_t step,
                double sqrt_dt) {
  const double b = c.rates.birth(p.position);
  const double d = c.rates.death(p.position);
  const double total = b + d;
  Kind kind = Kind::move;
  if (total > 0.0) {
    const double u = s.uniforms(rng::Purpose::step, 0, step, p.id)[0];
    const double prob = -std::expm1(-total * c.dt);
    if (u < prob * (b / total)) {
      kind = Kind::split;
    } else if (u < prob) {
      kind = Kind::die;
    }
  }
  if (kind == Kind::die) return {p.position, kind, false};
  const double z = s.normal(rng::Purpose::step, 1, step, p.id);
  const double x = p.position - c.rho * c.dt + sqrt_dt * z;
  const bool absorbed = c.barrier.has_value() && x >= *c.barrier;
  return {x, kind, absorbed};
}

void check_caps(const PopulationState& state, const SimConfig& c) {
  if (state.alive.size() > c.max_particles) {
    throw ExplosionError("population of " + std::to_string(state.alive.size()) +
                             " exceeds max_particles at t = " + std::to_string(state.time),
                         state.time);
  }
  if (state.particle_steps > c.max_particle_steps) {
    throw ExplosionError("particle-step budget exhausted at t = " + std::to_string(state.time),
                         state.time);
  }
}

struct Counts {
  std::uint64_t survivors = 0;
  std::uint64_t children = 0;
  std::uint64_t live_children = 0;
  std::uint64_t parent_absorbed = 0;
  std::uint64_t deaths = 0;

  void tally(const Outcome& o) {
    if (o.kind == Kind::die) {
      ++deaths;
      return;
    }
    if (o.absorbed) {
      ++parent_absorbed;
    } else {
      ++survivors;
    }
    if (o.kind == Kind::split) {
      ++children;
      if (!o.absorbed) ++live_children;
    }
  }
  Counts& operator+=(const Counts& o) {
    survivors += o.survivors;
    children += o.children;
    live_children += o.live_children;
    parent_absorbed += o.parent_absorbed;
    deaths += o.deaths;
    return *this;
  }
};

}  // namespace

RateFamily RateFamily::canonical(double beta) {
  RateFamily r;
  r.canonical_ = true;
  r.beta_ = beta;
  r.alpha_ = 0.5;
  return r;
}

RateFamily RateFamily::custom(std::function<double(double)> birth,
                              std::function<double(double)> death, double beta, double alpha) {
  if (!birth || !death) throw std::invalid_argument("rates: birth and death must be set");
  RateFamily r;
  r.canonical_ = false;
  r.beta_ = beta;
  r.alpha_ = alpha;
  r.birth_ = std::move(birth);
  r.death_ = std::move(death);
  return r;
}

RateFamily RateFamily::constant(double birth, double death) {
  if (!(birth >= 0.0 && death >= 0.0)) throw std::invalid_argument("rates: must be >= 0");
  return custom([birth](double) { return birth; }, [death](double) { return death; }, 0.0,
                death > 0.0 ? std::min(death, 0.5) : 0.0);
}

void RateFamily::validate(double lo, double hi) const {
  for (int i = 0; i < kGridPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kGridPoints - 1);
    const double b = birth(x);
    const double d = death(x);
    if (!(b >= 0.0 && d >= 0.0)) throw std::invalid_argument("rates: negative rate");
    if (std::fabs((b - d) - beta_ * x) > 1e-12 * std::max(1.0, std::fabs(beta_ * x))) {
      throw std::invalid_argument("rates: birth - death != beta x at x = " + std::to_string(x));
    }
    if (d < alpha_) throw std::invalid_argument("rates: death below alpha at x = " + std::to_string(x));
    if ((beta_ <= 0.0 || x <= 1.0 / beta_) && b > 1.0 / alpha_) {
      throw std::invalid_argument("rates: birth above 1/alpha at x = " + std::to_string(x));
    }
  }
}

double RateFamily::sup_total_rate(double lo, double hi) const {
  double sup = 0.0;
  for (int i = 0; i < kGridPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kGridPoints - 1);
    sup = std::max(sup, birth(x) + death(x));
  }
  return sup;
}

SimConfig SimConfig::make(double rho, const RateFamily& rates, double dt, double t_end,
                          std::vector<double> snapshot_times) {
  SimConfig c;
  c.rho = rho;
  c.beta = rates.beta();
  c.rates = rates;
  c.dt = dt;
  c.t_end = t_end;
  c.snapshot_times = std::move(snapshot_times);
  c.validate();
  return c;
}

std::pair<double, double> SimConfig::working_window() const {
  if (rho > 0.0 && beta > 0.0) {
    const auto e = theory::edges({rho, beta});
    return {e.l_bar - 5.0, e.l_right + 5.0};
  }
  return {-10.0, 10.0};
}

void SimConfig::validate() const {
  if (!(std::isfinite(rho) && rho >= 0.0)) throw std::invalid_argument("sim: rho must be >= 0");
  if (!(std::isfinite(dt) && dt > 0.0)) throw std::invalid_argument("sim: dt must be > 0");
  if (!(std::isfinite(t_end) && t_end >= 0.0)) throw std::invalid_argument("sim: t_end must be >= 0");
  const auto [lo, hi] = working_window();
  const double sup = rates.sup_total_rate(lo, hi);
  if (dt * sup > 0.05) {
    throw std::invalid_argument("sim: dt * sup(b + d) = " + std::to_string(dt * sup) +
                                " exceeds 0.05 on the working window");
  }
  if (t_end / dt >= 4.0e9) throw std::invalid_argument("sim: too many steps");
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : snapshot_times) {
    if (!(t >= 0.0 && t <= t_end)) throw std::invalid_argument("sim: snapshot outside [0, t_end]");
    if (t < prev) throw std::invalid_argument("sim: snapshot times must be sorted");
    prev = t;
  }
  if (max_particles == 0) throw std::invalid_argument("sim: max_particles must be positive");
  if (max_particle_steps == 0) throw std::invalid_argument("sim: max_particle_steps must be positive");
  if (barrier && !std::isfinite(*barrier)) throw std::invalid_argument("sim: barrier must be finite");
}

std::uint64_t SimConfig::total_steps() const { return step_of(t_end); }

std::uint64_t SimConfig::step_of(double t) const {
  return static_cast<std::uint64_t>(std::llround(t / dt));
}

void step_serial(PopulationState& state, const SimConfig& config, const rng::Stream& stream) {
  const auto step = static_cast<std::uint32_t>(state.step);
  const double sqrt_dt = std::sqrt(config.dt);
  const double t_new = static_cast<double>(state.step + 1) * config.dt;

  std::vector<Particle> next;
  std::vector<Particle> children;
  std::vector<std::uint64_t> absorbed_children;
  next.reserve(state.alive.size());
  state.particle_steps += state.alive.size();
  for (const Particle& p : state.alive) {
    const Outcome o = advance(p, config, stream, step, sqrt_dt);
    if (o.kind == Kind::die) {
      ++state.deaths;
      continue;
    }
    if (o.kind == Kind::split) {
      ++state.splits;
      Particle child{state.next_id++, static_cast<std::int64_t>(p.id), o.x, t_new, Status::alive};
      if (o.absorbed) {
        absorbed_children.push_back(child.id);
      } else {
        children.push_back(child);
      }
    }
    if (o.absorbed) {
      ++state.absorptions;
      state.cumulative_absorbed.emplace_back(t_new, p.id);
    } else {
      Particle moved = p;
      moved.position = o.x;
      next.push_back(moved);
    }
  }
  for (std::uint64_t id : absorbed_children) {
    ++state.absorptions;
    state.cumulative_absorbed.emplace_back(t_new, id);
  }
  next.insert(next.end(), children.begin(), children.end());
  state.alive = std::move(next);
  state.step += 1;
  state.time = t_new;
  check_caps(state, config);
}

void step_parallel(PopulationState& state, const SimConfig& config, const rng::Stream& stream) {
  const auto step = static_cast<std::uint32_t>(state.step);
  const double sqrt_dt = std::sqrt(config.dt);
  const double t_new = static_cast<double>(state.step + 1) * config.dt;
  const std::size_t n = state.alive.size();
  const std::vector<Particle>& cur = state.alive;

  std::vector<Outcome> outcome(n);
  const int max_threads = omp_get_max_threads();
  std::vector<Counts> prefix(static_cast<std::size_t>(max_threads) + 1);
  std::vector<Particle> next;
  std::vector<std::pair<double, std::uint64_t>> absorbed;
  Counts total;

#pragma omp parallel num_threads(max_threads)
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    Counts local;
    for (std::size_t i = lo; i < hi; ++i) {
      outcome[i] = advance(cur[i], config, stream, step, sqrt_dt);
      local.tally(outcome[i]);
    }
    prefix[t + 1] = local;
#pragma omp barrier
#pragma omp single
    {
      for (std::size_t k = 1; k <= nt; ++k) prefix[k] += prefix[k - 1];
      total = prefix[nt];
      next.resize(total.survivors + total.live_children);
      absorbed.resize(total.parent_absorbed + (total.children - total.live_children));
    }
    // Exclusive offsets for this chunk; layout matches step_serial exactly.
    Counts off = prefix[t];
    for (std::size_t i = lo; i < hi; ++i) {
      const Outcome& o = outcome[i];
      if (o.kind == Kind::die) continue;
      const Particle& p = cur[i];
      if (o.kind == Kind::split) {
        const std::uint64_t child_id = state.next_id + off.children;
        if (o.absorbed) {
          absorbed[total.parent_absorbed + (off.children - off.live_children)] = {t_new, child_id};
        } else {
          next[total.survivors + off.live_children] = {
              child_id, static_cast<std::int64_t>(p.id), o.x, t_new, Status::alive};
          ++off.live_children;
        }
        ++off.children;
      }
      if (o.absorbed) {
        absorbed[off.parent_absorbed++] = {t_new, p.id};
      } else {
        Particle moved = p;
        moved.position = o.x;
        next[off.survivors++] = moved;
      }
    }
  }

  state.particle_steps += n;
  state.splits += total.children;
  state.deaths += total.deaths;
  state.absorptions += absorbed.size();
  state.next_id += total.children;
  state.cumulative_absorbed.insert(state.cumulative_absorbed.end(), absorbed.begin(),
                                   absorbed.end());
  state.alive = std::move(next);
  state.step += 1;
  state.time = t_new;
  check_caps(state, config);
}

void run_replicate(const SimConfig& config, PopulationState initial, std::uint64_t seed,
                   const SnapshotObserver& on_snapshot) {
  config.validate();
  if (initial.time != 0.0 || initial.step != 0) {
    throw std::invalid_argument("run_replicate: initial state must be at time 0");
  }
  const rng::Stream stream(seed);
  PopulationState& state = initial;
  const std::uint64_t last = config.total_steps();
  std::size_t next_snap = 0;
  const bool can_split = omp_get_max_threads() > 1 && !omp_in_parallel();
  while (true) {
    while (next_snap < config.snapshot_times.size() &&
           config.step_of(config.snapshot_times[next_snap]) <= state.step) {
      on_snapshot(state);
      ++next_snap;
    }
    if (state.step >= last) break;
    if (state.alive.empty()) {
      // Extinct: nothing changes until the next snapshot.
      const std::uint64_t target = next_snap < config.snapshot_times.size()
                                       ? config.step_of(config.snapshot_times[next_snap])
                                       : last;
      state.step = std::min(target, last);
      state.time = static_cast<double>(state.step) * config.dt;
      continue;
    }
    if (can_split && state.alive.size() >= kParallelStepThreshold) {
      step_parallel(state, config, stream);
    } else {
      step_serial(state, config, stream);
    }
  }
}

std::vector<Snapshot> run_replicate(const SimConfig& config, const PopulationState& initial,
                                    std::uint64_t seed) {
  std::vector<Snapshot> out;
  run_replicate(config, initial, seed,
                [&out](const PopulationState& s) { out.push_back({s.time, s}); });
  return out;
}

PopulationState initial_single(double x) {
  PopulationState s;
  s.alive.push_back({0, -1, x, 0.0, Status::alive});
  s.next_id = 1;
  return s;
}

PopulationState initial_airy(const theory::ModelParams& params, std::uint64_t seed,
                             std::size_t max_particles) {
  params.validate();
  const auto e = theory::edges(params);
  const double k = std::cbrt(2.0 * params.beta);
  const double g1 = airy::gamma1();
  // Work relative to e^{rho L} so large edges cannot overflow.
  const double target = std::cbrt(params.beta) / std::pow(params.rho, 3);
  const rng::Stream stream(seed);
  const std::uint64_t max_draws = 1000 * static_cast<std::uint64_t>(max_particles) + 1'000'000;

  PopulationState s;
  CompensatedSum z_rel;
  CompensatedSum y_sum;
  for (std::uint64_t draw = 0; z_rel.value() < target; ++draw) {
    if (draw >= max_draws) throw std::runtime_error("initial_airy: Z target not reachable");
    const double u = stream.uniforms(rng::Purpose::initial, 0, 0, draw)[0];
    const double y = theory::edge_profile_quantile(u);
    const double w = std::exp(-params.rho * y / k) * airy::ai(y + g1);
    if (z_rel.value() + w > 2.0 * target) continue;
    if (s.alive.size() + 1 > max_particles) {
      throw ExplosionError("initial_airy: Z target needs more than max_particles", 0.0);
    }
    const double x = e.l_right - y / k;
    s.alive.push_back({s.next_id++, -1, x, 0.0, Status::alive});
    z_rel.add(w);
    y_sum.add(std::exp(params.rho * x));
  }
  s.initial_z = std::exp(params.rho * e.l_right) * z_rel.value();
  s.initial_y = y_sum.value();
  return s;
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("BBMWAVE_WORKERS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) {
      throw std::invalid_argument(std::string("BBMWAVE_WORKERS must be a positive integer, got '") +
                                  env + "'");
    }
    return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  return omp_get_max_threads();
}

namespace detail {

void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  std::exception_ptr first_error;
  std::size_t first_index = n;
  std::mutex guard;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail
}  // namespace bbmwave::sim

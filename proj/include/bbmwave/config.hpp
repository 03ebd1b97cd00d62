#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/observables.hpp"
#include "bbmwave/wave_theory.hpp"

namespace bbmwave::config {

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Comparison { first_moment, figure1, ratio_dn, zeta_ks, xi_ks, extremes };

std::string to_string(Comparison c);
Comparison comparison_from_string(const std::string& s);

struct InitialSpec {
  enum class Kind { single, airy } kind = Kind::single;
  double x = 0.0;  // single only
};

/// Closed acceptance band for a statistic; absent bands mean "monitor".
struct Band {
  double lo;
  double hi;
};

struct ExperimentConfig {
  std::string name;
  double rho = 0.0;
  double beta = 0.0;
  double alpha = 0.5;
  std::string rates = "canonical";  // or "constant"
  double birth = 1.0;               // constant family only
  double death = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> snapshot_times;
  std::optional<std::string> barrier;  // "L" or a number
  std::size_t max_particles = 1'000'000;
  std::uint64_t max_particle_steps = 10'000'000;
  InitialSpec initial;
  std::size_t replicates = 1;
  std::uint64_t base_seed = 0;
  std::vector<obs::IntervalQuery> intervals;
  std::set<Comparison> comparisons;
  std::filesystem::path output_dir;
  int workers = 0;
  /// Interval used by ratio_dn (index into intervals).
  std::size_t ratio_interval = 0;
  std::map<std::string, Band> thresholds;
  /// first_moment: also report the deterministic dt-halving bias ratio.
  bool dt_halving = false;

  /// Model parameters when beta > 0 (the formulas need edges).
  std::optional<theory::ModelParams> model() const;
  sim::RateFamily rate_family() const;
  sim::SimConfig sim_config() const;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Parses a config document. Relative output_dir values are resolved
/// against `base_dir`.
ExperimentConfig parse(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load(const std::filesystem::path& path);

/// Canonical JSON form, written next to the outputs.
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace bbmwave::config

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bbmwave/config.hpp"
#include "bbmwave/csv.hpp"
#include "bbmwave/wave_theory.hpp"

namespace bbmwave::harness {

enum ExitCode : int { kOk = 0, kComparisonFailure = 1, kConfigError = 2, kMissingData = 3 };

/// Simulation outputs needed by a comparison are absent (exit code 3).
class MissingData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ComparisonReport {
  std::string name;
  double observed = 0.0;
  double predicted = 0.0;
  std::optional<double> std_error;
  bool pass = false;
  std::string mode;            // "gate" or "monitor"
  std::string tolerance_spec;  // the rule pass was computed from
};

/// Figure 1 parameters.
inline constexpr double kFigureRho = 1e-4;
inline constexpr double kFigureBeta = 1e-13;
inline constexpr std::size_t kFigurePoints = 2001;

std::string edges_text(const theory::ModelParams& params);

/// n equally spaced points from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

/// Columns y followed by the requested curves (f, f_airy, f_gauss). Points
/// outside a curve's domain or the Airy window are empty cells.
csv::Table profile_table(const theory::ModelParams& params, const std::vector<double>& grid,
                         const std::vector<theory::CurveKind>& which);

/// Profile over [L-dagger, L*] at the Figure 1 parameters.
csv::Table figure1_table(std::size_t points = kFigurePoints);

/// Number of places where a descent is later followed by an ascent; zero
/// exactly when the sequence is unimodal.
std::size_t count_valleys(const std::vector<double>& values);

/// Shape checks for the three profiles on [L-dagger, L*]: finiteness,
/// unimodality and |f / f_airy - 1| < 0.02 where (2 beta)^{1/3} (L* - y) >= 12.
std::vector<ComparisonReport> figure1_checks(const theory::ModelParams& params,
                                             std::size_t points = kFigurePoints);

struct SimulationOutput {
  csv::Table replicates;
  csv::Table aggregate;
  csv::Table explosions;
};

/// Runs every replicate and builds the three tables. Deterministic for a
/// fixed config, whatever the worker count.
SimulationOutput simulate(const config::ExperimentConfig& cfg, int workers);

/// Writes replicates.csv, aggregate.csv, explosions.csv and config.json.
void write_simulation(const SimulationOutput& out, const config::ExperimentConfig& cfg);

std::vector<ComparisonReport> compare(const config::ExperimentConfig& cfg,
                                      const csv::Table& replicates);

/// Loads replicates.csv from the config's output directory; MissingData if absent.
csv::Table load_replicates(const config::ExperimentConfig& cfg);

csv::Table report_table(const std::vector<ComparisonReport>& reports);
nlohmann::json report_json(const std::vector<ComparisonReport>& reports);

/// Writes report.csv and report.json; returns the exit code the reports imply.
int write_reports(const std::vector<ComparisonReport>& reports, const std::filesystem::path& dir);

/// Median of the values (empty input -> NaN).
double median(std::vector<double> values);

}  // namespace bbmwave::harness

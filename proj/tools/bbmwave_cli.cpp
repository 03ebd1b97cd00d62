// Command-line front end: edges, profile, figure1, simulate, compare.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/config.hpp"
#include "bbmwave/csv.hpp"
#include "bbmwave/harness.hpp"
#include "bbmwave/wave_theory.hpp"

namespace {

using namespace bbmwave;

struct Overrides {
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<double> dt;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--replicates", o.replicates, "Override the replicate count");
  cmd->add_option("--seed", o.seed, "Override base_seed");
  cmd->add_option("--output-dir", o.output_dir, "Override output_dir");
  cmd->add_option("--workers", o.workers, "Worker threads (BBMWAVE_WORKERS wins)");
  cmd->add_option("--dt", o.dt, "Override the time step");
}

config::ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  auto cfg = config::load(path);
  if (o.replicates) cfg.replicates = *o.replicates;
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.workers) cfg.workers = *o.workers;
  if (o.dt) cfg.dt = *o.dt;
  cfg.validate();
  return cfg;
}

std::vector<theory::CurveKind> parse_curves(const std::vector<std::string>& names) {
  std::vector<theory::CurveKind> out;
  for (const auto& n : names) {
    if (n == "f") out.push_back(theory::CurveKind::f);
    else if (n == "f_airy") out.push_back(theory::CurveKind::f_airy);
    else if (n == "f_gauss") out.push_back(theory::CurveKind::f_gauss);
    else throw config::ConfigError("unknown curve '" + n + "' (expected f, f_airy, f_gauss)");
  }
  return out;
}

void emit(const csv::Table& t, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << csv::to_string(t);
  } else {
    csv::write(out, t);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching Brownian motion with linear selection: theory curves and simulation"};
  app.require_subcommand(1);

  double rho = 0.0;
  double beta = 0.0;
  auto* edges = app.add_subcommand("edges", "Print edge positions and regime diagnostics");
  edges->add_option("--rho", rho, "Drift magnitude")->required();
  edges->add_option("--beta", beta, "Selection gradient")->required();

  std::optional<double> lo;
  std::optional<double> hi;
  std::size_t points = harness::kFigurePoints;
  std::vector<std::string> curves = {"f", "f_airy", "f_gauss"};
  std::string out;
  auto* profile = app.add_subcommand("profile", "Write f, f_airy and f_gauss on a grid");
  profile->add_option("--rho", rho, "Drift magnitude")->required();
  profile->add_option("--beta", beta, "Selection gradient")->required();
  profile->add_option("--lo", lo, "Grid start (default L-dagger)");
  profile->add_option("--hi", hi, "Grid end (default L*)");
  profile->add_option("--points", points, "Grid points")->check(CLI::Range(2, 10'000'000));
  profile->add_option("--curves", curves, "Subset of f, f_airy, f_gauss")->delimiter(',');
  profile->add_option("--out,-o", out, "Output CSV (default stdout)");

  auto* figure1 = app.add_subcommand("figure1", "Profile at rho = 1e-4, beta = 1e-13 over [L-dagger, L*]");
  figure1->add_option("--points", points, "Grid points")->check(CLI::Range(2, 10'000'000));
  figure1->add_option("--out,-o", out, "Output CSV (default stdout)");

  std::string config_path;
  Overrides sim_over;
  auto* simulate = app.add_subcommand("simulate", "Run the replicates of a JSON config");
  simulate->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_overrides(simulate, sim_over);

  Overrides cmp_over;
  bool run_first = false;
  auto* compare = app.add_subcommand("compare", "Compare simulation output with theory");
  compare->add_option("config", config_path, "Experiment config (JSON)")->required();
  compare->add_flag("--run", run_first, "Simulate first instead of reading existing output");
  add_overrides(compare, cmp_over);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? harness::kOk : harness::kConfigError;
  }

  try {
    if (*edges) {
      std::cout << harness::edges_text({rho, beta});
      return harness::kOk;
    }
    if (*profile) {
      const theory::ModelParams p{rho, beta};
      p.validate();
      const auto e = theory::edges(p);
      const auto grid = harness::linear_grid(lo.value_or(e.l_dagger), hi.value_or(e.l_star), points);
      emit(harness::profile_table(p, grid, parse_curves(curves)), out);
      return harness::kOk;
    }
    if (*figure1) {
      emit(harness::figure1_table(points), out);
      return harness::kOk;
    }
    if (*simulate) {
      const auto cfg = load_with(config_path, sim_over);
      const int workers = sim::resolve_workers(cfg.workers);
      const auto result = harness::simulate(cfg, workers);
      harness::write_simulation(result, cfg);
      std::cerr << "simulate: " << result.replicates.rows.size() << " rows, "
                << result.explosions.rows.size() << " replicate(s) flagged, output in "
                << cfg.output_dir.string() << '\n';
      return harness::kOk;
    }
    if (*compare) {
      const auto cfg = load_with(config_path, cmp_over);
      csv::Table reps;
      if (run_first) {
        const auto result = harness::simulate(cfg, sim::resolve_workers(cfg.workers));
        harness::write_simulation(result, cfg);
        reps = result.replicates;
      } else if (cfg.comparisons.size() > cfg.comparisons.count(config::Comparison::figure1)) {
        reps = harness::load_replicates(cfg);
      }
      const auto reports = harness::compare(cfg, reps);
      for (const auto& r : reports) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.mode << ' ' << r.name
                  << " observed=" << csv::format_real(r.observed)
                  << " predicted=" << csv::format_real(r.predicted) << '\n';
      }
      return harness::write_reports(reports, cfg.output_dir.empty() ? "." : cfg.output_dir);
    }
  } catch (const harness::MissingData& e) {
    std::cerr << "missing data: " << e.what() << '\n';
    return harness::kMissingData;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return harness::kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return harness::kConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return harness::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return harness::kConfigError;
  }
  return harness::kOk;
}

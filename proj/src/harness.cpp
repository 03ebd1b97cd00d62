#include "bbmwave/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bbmwave/airy.hpp"
#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/observables.hpp"
#include "bbmwave/sum.hpp"

namespace bbmwave::harness {
namespace {

using config::Comparison;
using config::ExperimentConfig;
using Cell = std::optional<double>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return csv::format_real(v); }

std::string interval_label(const obs::IntervalQuery& q) {
  return "[" + num(q.lo) + ";" + num(q.hi) + "]";
}

struct ReplicateResult {
  std::vector<std::vector<Cell>> rows;
  bool failed = false;
  double fail_time = 0.0;
  std::string message;
};

// Column layout of replicates.csv after the replicate and seed columns.
std::vector<std::string> value_columns(const ExperimentConfig& cfg) {
  std::vector<std::string> cols = {"time", "n_total"};
  for (std::size_t k = 0; k < cfg.intervals.size(); ++k) cols.push_back("n_interval_" + std::to_string(k));
  cols.insert(cols.end(), {"y_stat", "z_stat", "max_pos", "min_pos"});
  if (cfg.comparisons.count(Comparison::ratio_dn)) {
    for (std::size_t k = 0; k < cfg.intervals.size(); ++k) cols.push_back("d_n_" + std::to_string(k));
  }
  if (cfg.comparisons.count(Comparison::zeta_ks)) cols.push_back("zeta_ks");
  if (cfg.comparisons.count(Comparison::xi_ks)) cols.push_back("xi_ks");
  cols.insert(cols.end(), {"splits", "deaths", "absorptions"});
  return cols;
}

ComparisonReport gate_or_monitor(const ExperimentConfig& cfg, const std::string& key,
                                 const std::string& name, double observed, double predicted) {
  ComparisonReport r;
  r.name = name;
  r.observed = observed;
  r.predicted = predicted;
  if (auto it = cfg.thresholds.find(key); it != cfg.thresholds.end()) {
    r.mode = "gate";
    r.pass = observed >= it->second.lo && observed <= it->second.hi;
    r.tolerance_spec = num(it->second.lo) + "<=observed<=" + num(it->second.hi);
  } else {
    r.mode = "monitor";
    r.pass = true;
    r.tolerance_spec = "monitor only (no calibrated band shipped)";
  }
  return r;
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN};
  CompensatedSum s;
  for (double x : v) s.add(x);
  const double mean = s.value() / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, kNaN};
  CompensatedSum ss;
  for (double x : v) ss.add((x - mean) * (x - mean));
  const double var = ss.value() / static_cast<double>(v.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

std::string edges_text(const theory::ModelParams& params) {
  const auto e = theory::edges(params);
  const auto d = theory::diagnostics(params);
  std::ostringstream out;
  out << "rho,beta,l_star,l_dagger,l_right,l_bar,rho3_over_beta,rho_over_beta13,asymptotic\n";
  out << num(params.rho) << ',' << num(params.beta) << ',' << num(e.l_star) << ','
      << num(e.l_dagger) << ',' << num(e.l_right) << ',' << num(e.l_bar) << ','
      << num(d.cubic_ratio) << ',' << num(d.edge_ratio) << ',' << (d.asymptotic ? "yes" : "no")
      << '\n';
  return out.str();
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo < hi)) throw std::invalid_argument("grid: need n >= 2 and lo < hi");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g.back() = hi;
  return g;
}

csv::Table profile_table(const theory::ModelParams& params, const std::vector<double>& grid,
                         const std::vector<theory::CurveKind>& which) {
  params.validate();
  csv::Table t;
  t.header.push_back("y");
  std::vector<theory::TheoryCurve> curves;
  for (auto kind : which) {
    t.header.push_back(theory::to_string(kind));
    curves.push_back(theory::sample_curve(params, kind, grid));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row = {num(grid[i])};
    for (const auto& c : curves) row.push_back(num(c.values[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

csv::Table figure1_table(std::size_t points) {
  const theory::ModelParams p{kFigureRho, kFigureBeta};
  const auto e = theory::edges(p);
  return profile_table(p, linear_grid(e.l_dagger, e.l_star, points),
                       {theory::CurveKind::f, theory::CurveKind::f_airy, theory::CurveKind::f_gauss});
}

std::size_t count_valleys(const std::vector<double>& values) {
  std::size_t valleys = 0;
  int last_dir = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const int dir = values[i] > values[i - 1] ? 1 : (values[i] < values[i - 1] ? -1 : 0);
    if (dir == 0) continue;
    if (last_dir == -1 && dir == 1) ++valleys;
    last_dir = dir;
  }
  return valleys;
}

std::vector<ComparisonReport> figure1_checks(const theory::ModelParams& params, std::size_t points) {
  params.validate();
  const auto e = theory::edges(params);
  const auto grid = linear_grid(e.l_dagger, e.l_star, points);
  const auto f = theory::sample_curve(params, theory::CurveKind::f, grid).values;
  const auto fa = theory::sample_curve(params, theory::CurveKind::f_airy, grid).values;
  const auto fg = theory::sample_curve(params, theory::CurveKind::f_gauss, grid).values;

  std::vector<ComparisonReport> out;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(f[i]) || !std::isfinite(fa[i]) || !std::isfinite(fg[i])) ++bad;
  }
  out.push_back({"figure1_finite", static_cast<double>(bad), 0.0, std::nullopt, bad == 0, "gate",
                 "observed==0 (non-finite points among f, f_airy, f_gauss)"});
  const std::pair<const char*, const std::vector<double>*> curves[] = {
      {"figure1_unimodal_f", &f}, {"figure1_unimodal_f_airy", &fa}, {"figure1_unimodal_f_gauss", &fg}};
  for (const auto& [name, vals] : curves) {
    const auto v = count_valleys(*vals);
    out.push_back({name, static_cast<double>(v), 0.0, std::nullopt, v == 0, "gate",
                   "observed==0 (descents later followed by an ascent)"});
  }
  const double k = std::cbrt(2.0 * params.beta);
  double worst = 0.0;
  std::size_t gated = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] < e.l_star) || k * (e.l_star - grid[i]) < 12.0) continue;
    ++gated;
    worst = std::max(worst, std::fabs(f[i] / fa[i] - 1.0));
  }
  out.push_back({"figure1_ratio_band", gated ? worst : kNaN, 0.0, std::nullopt,
                 gated == 0 || worst < 0.02, "gate",
                 "observed<0.02 over " + std::to_string(gated) +
                     " points with (2beta)^(1/3)(L*-y)>=12 (vacuous when 0)"});
  out.push_back({"figure1_ratio_band_points", static_cast<double>(gated), kNaN, std::nullopt, true,
                 "monitor", "count of points inside the ratio band"});
  return out;
}

SimulationOutput simulate(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  const auto model = cfg.model();
  const auto sc = cfg.sim_config();
  const bool want_dn = cfg.comparisons.count(Comparison::ratio_dn) > 0;
  const bool want_zeta = cfg.comparisons.count(Comparison::zeta_ks) > 0;
  const bool want_xi = cfg.comparisons.count(Comparison::xi_ks) > 0;

  std::vector<double> masses;
  if (want_dn) {
    const double l_star = theory::edges(*model).l_star;
    for (const auto& q : cfg.intervals) {
      masses.push_back(q.lo < l_star ? theory::profile_f_mass(*model, q.lo, q.hi) : kNaN);
    }
  }

  auto results = sim::run_ensemble(cfg.replicates, cfg.base_seed, workers, [&](std::size_t,
                                                                               std::uint64_t seed) {
    ReplicateResult r;
    try {
      const auto initial = cfg.initial.kind == config::InitialSpec::Kind::single
                               ? sim::initial_single(cfg.initial.x)
                               : sim::initial_airy(*model, seed, cfg.max_particles);
      sim::run_replicate(sc, initial, seed, [&](const sim::PopulationState& s) {
        std::vector<Cell> row;
        row.push_back(s.time);
        row.push_back(static_cast<double>(s.alive.size()));
        for (const auto& q : cfg.intervals) row.push_back(static_cast<double>(obs::count_interval(s, q)));
        if (model) {
          row.push_back(obs::stat_Y(s, *model));
          row.push_back(obs::stat_Z(s, *model));
        } else {
          row.insert(row.end(), 2, std::nullopt);
        }
        const auto ext = obs::extremes(s);
        row.push_back(ext ? Cell(ext->first) : std::nullopt);
        row.push_back(ext ? Cell(ext->second) : std::nullopt);
        if (want_dn) {
          for (std::size_t k = 0; k < cfg.intervals.size(); ++k) {
            row.push_back(!s.alive.empty() && masses[k] > 0.0
                              ? Cell(obs::ratio_Dn(s, cfg.intervals[k], masses[k]))
                              : std::nullopt);
          }
        }
        if (want_zeta) {
          row.push_back(s.alive.empty() ? std::nullopt
                                        : Cell(obs::ks_distance(obs::empirical_zeta(s, *model),
                                                                obs::standard_normal_cdf)));
        }
        if (want_xi) {
          row.push_back(s.alive.empty() ? std::nullopt
                                        : Cell(obs::ks_distance(obs::empirical_xi(s, *model),
                                                                theory::edge_profile_cdf)));
        }
        row.push_back(static_cast<double>(s.splits));
        row.push_back(static_cast<double>(s.deaths));
        row.push_back(static_cast<double>(s.absorptions));
        r.rows.push_back(std::move(row));
      });
    } catch (const sim::ExplosionError& e) {
      r = ReplicateResult{};
      r.failed = true;
      r.fail_time = e.time();
      r.message = e.what();
    } catch (const std::overflow_error& e) {
      r = ReplicateResult{};
      r.failed = true;
      r.fail_time = kNaN;
      r.message = e.what();
    }
    return r;
  });

  SimulationOutput out;
  const auto cols = value_columns(cfg);
  out.replicates.header = {"replicate", "seed"};
  out.replicates.header.insert(out.replicates.header.end(), cols.begin(), cols.end());
  out.explosions.header = {"replicate", "seed", "time", "message"};

  const std::size_t n_snap = cfg.snapshot_times.size();
  // values[j][c] collects column c at snapshot j over surviving replicates.
  std::vector<std::vector<std::vector<double>>> values(n_snap,
                                                       std::vector<std::vector<double>>(cols.size()));
  std::vector<double> snap_time(n_snap, kNaN);
  std::size_t used = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto seed = sim::replicate_seed(cfg.base_seed, i);
    const auto& r = results[i];
    if (r.failed) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      out.explosions.rows.push_back({std::to_string(i), std::to_string(seed), num(r.fail_time), msg});
      continue;
    }
    ++used;
    for (std::size_t j = 0; j < r.rows.size(); ++j) {
      std::vector<std::string> line = {std::to_string(i), std::to_string(seed)};
      for (std::size_t c = 0; c < r.rows[j].size(); ++c) {
        line.push_back(csv::format_real(r.rows[j][c]));
        if (c > 0 && r.rows[j][c]) values[j][c].push_back(*r.rows[j][c]);
      }
      snap_time[j] = *r.rows[j][0];
      out.replicates.rows.push_back(std::move(line));
    }
  }

  out.aggregate.header = {"time", "replicates_used", "replicates_excluded"};
  for (std::size_t c = 1; c < cols.size(); ++c) {
    out.aggregate.header.push_back(cols[c] + "_mean");
    out.aggregate.header.push_back(cols[c] + "_se");
  }
  for (std::size_t j = 0; j < n_snap; ++j) {
    if (used == 0) break;
    std::vector<std::string> line = {num(snap_time[j]), std::to_string(used),
                                     std::to_string(results.size() - used)};
    for (std::size_t c = 1; c < cols.size(); ++c) {
      const auto [m, se] = mean_and_se(values[j][c]);
      line.push_back(num(m));
      line.push_back(num(se));
    }
    out.aggregate.rows.push_back(std::move(line));
  }
  return out;
}

void write_simulation(const SimulationOutput& out, const ExperimentConfig& cfg) {
  if (cfg.output_dir.empty()) throw config::ConfigError("output_dir is not set");
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw config::ConfigError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
  csv::write(cfg.output_dir / "replicates.csv", out.replicates);
  csv::write(cfg.output_dir / "aggregate.csv", out.aggregate);
  csv::write(cfg.output_dir / "explosions.csv", out.explosions);
  std::ofstream f(cfg.output_dir / "config.json", std::ios::binary | std::ios::trunc);
  f << config::to_json(cfg).dump(2) << '\n';
}

csv::Table load_replicates(const ExperimentConfig& cfg) {
  const auto path = cfg.output_dir / "replicates.csv";
  if (!std::filesystem::exists(path)) {
    throw MissingData("no simulation output at " + path.string() + "; run 'simulate' first");
  }
  return csv::read(path);
}

std::vector<ComparisonReport> compare(const ExperimentConfig& cfg, const csv::Table& replicates) {
  cfg.validate();
  std::vector<ComparisonReport> reports;
  if (cfg.comparisons.empty()) return reports;

  const bool needs_sim = cfg.comparisons.size() > cfg.comparisons.count(Comparison::figure1);
  // Rows grouped by snapshot time, in file order.
  std::vector<std::string> times;
  std::map<std::string, std::vector<std::size_t>> by_time;
  std::size_t time_col = 0;
  if (needs_sim) {
    try {
      time_col = replicates.column("time");
    } catch (const std::out_of_range&) {
      throw MissingData("replicates table has no time column");
    }
    for (std::size_t i = 0; i < replicates.rows.size(); ++i) {
      const auto& t = replicates.rows[i].at(time_col);
      if (!by_time.count(t)) times.push_back(t);
      by_time[t].push_back(i);
    }
    if (times.empty()) throw MissingData("replicates table is empty");
  }
  auto column_values = [&](const std::string& col, const std::string& t) {
    std::size_t c = 0;
    try {
      c = replicates.column(col);
    } catch (const std::out_of_range&) {
      throw MissingData("replicates table lacks column " + col + "; re-run simulate");
    }
    std::vector<double> v;
    for (auto i : by_time.at(t)) {
      if (auto x = csv::parse_real(replicates.rows[i].at(c))) v.push_back(*x);
    }
    return v;
  };

  if (cfg.comparisons.count(Comparison::first_moment)) {
    const theory::ModelParams p{cfg.rho, cfg.beta, cfg.alpha};
    for (const auto& t_str : times) {
      const double t = *csv::parse_real(t_str);
      if (!(t > 0.0)) continue;
      for (std::size_t k = 0; k < cfg.intervals.size(); ++k) {
        const auto& q = cfg.intervals[k];
        const auto [mean, se] = mean_and_se(column_values("n_interval_" + std::to_string(k), t_str));
        const double pred = theory::mean_count_quadrature(p, t, cfg.initial.x, q.lo, q.hi);
        ComparisonReport r;
        r.name = "first_moment t=" + t_str + " q=" + interval_label(q);
        r.observed = mean;
        r.predicted = pred;
        r.std_error = se;
        r.mode = "gate";
        r.pass = std::fabs(mean - pred) <= 3.0 * se;
        r.tolerance_spec = "abs(observed-predicted)<=3*std_error";
        reports.push_back(r);
      }
    }
    if (cfg.dt_halving && !cfg.intervals.empty()) {
      const double t = *csv::parse_real(times.back());
      const auto& q = cfg.intervals.front();
      const auto rates = cfg.rate_family();
      const double exact = theory::mean_count_quadrature(p, t, cfg.initial.x, q.lo, q.hi);
      const double e1 = sim::scheme_moment(cfg.rho, rates, cfg.dt, t, cfg.initial.x, q.lo, q.hi);
      const double e2 = sim::scheme_moment(cfg.rho, rates, cfg.dt / 2, t, cfg.initial.x, q.lo, q.hi);
      const double ratio = (e1 - exact) / (e2 - exact);
      reports.push_back({"first_moment_dt_halving t=" + times.back() + " q=" + interval_label(q),
                         ratio, 2.0, std::nullopt, ratio >= 1.5 && ratio <= 3.0, "gate",
                         "1.5<=observed<=3 (scheme bias at dt over bias at dt/2)"});
    }
  }

  if (cfg.comparisons.count(Comparison::figure1)) {
    const auto fig = figure1_checks(*cfg.model());
    reports.insert(reports.end(), fig.begin(), fig.end());
  }

  const std::string last = times.empty() ? std::string{} : times.back();
  auto med = [&](const std::string& col) {
    const auto v = column_values(col, last);
    if (v.empty()) throw MissingData("no values for " + col + " at t=" + last);
    return median(v);
  };
  if (cfg.comparisons.count(Comparison::ratio_dn)) {
    const auto& q = cfg.intervals[cfg.ratio_interval];
    reports.push_back(gate_or_monitor(cfg, "ratio_dn",
                                      "ratio_dn median t=" + last + " q=" + interval_label(q),
                                      med("d_n_" + std::to_string(cfg.ratio_interval)), 1.0));
  }
  if (cfg.comparisons.count(Comparison::zeta_ks)) {
    reports.push_back(gate_or_monitor(cfg, "zeta_ks", "zeta_ks median t=" + last, med("zeta_ks"), 0.0));
  }
  if (cfg.comparisons.count(Comparison::xi_ks)) {
    reports.push_back(gate_or_monitor(cfg, "xi_ks", "xi_ks median t=" + last, med("xi_ks"), 0.0));
  }
  if (cfg.comparisons.count(Comparison::extremes)) {
    const auto e = theory::edges(*cfg.model());
    auto scaled = [&](const std::string& col, double by) {
      auto v = column_values(col, last);
      if (v.empty()) throw MissingData("no values for " + col + " at t=" + last);
      for (double& x : v) x /= by;
      return median(v);
    };
    reports.push_back(gate_or_monitor(cfg, "extremes_max", "extremes max/L* median t=" + last,
                                      scaled("max_pos", e.l_star), 1.0));
    reports.push_back(gate_or_monitor(cfg, "extremes_min", "extremes min/L-dagger median t=" + last,
                                      scaled("min_pos", e.l_dagger), 1.0));
  }
  return reports;
}

csv::Table report_table(const std::vector<ComparisonReport>& reports) {
  csv::Table t;
  t.header = {"name", "observed", "predicted", "std_error", "pass", "mode", "tolerance_spec"};
  for (const auto& r : reports) {
    t.rows.push_back({r.name, num(r.observed), num(r.predicted), csv::format_real(r.std_error),
                      r.pass ? "true" : "false", r.mode, r.tolerance_spec});
  }
  return t;
}

nlohmann::json report_json(const std::vector<ComparisonReport>& reports) {
  auto real = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : reports) {
    doc.push_back({{"name", r.name},
                   {"observed", real(r.observed)},
                   {"predicted", real(r.predicted)},
                   {"std_error", r.std_error ? real(*r.std_error) : nlohmann::json(nullptr)},
                   {"pass", r.pass},
                   {"mode", r.mode},
                   {"tolerance_spec", r.tolerance_spec}});
  }
  return doc;
}

int write_reports(const std::vector<ComparisonReport>& reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  csv::write(dir / "report.csv", report_table(reports));
  std::ofstream f(dir / "report.json", std::ios::binary | std::ios::trunc);
  f << report_json(reports).dump(2) << '\n';
  for (const auto& r : reports) {
    if (r.mode == "gate" && !r.pass) return kComparisonFailure;
  }
  return kOk;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace bbmwave::harness

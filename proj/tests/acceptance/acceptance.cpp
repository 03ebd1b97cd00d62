// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all nine.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bbmwave/airy.hpp"
#include "bbmwave/bbm_sim.hpp"
#include "bbmwave/config.hpp"
#include "bbmwave/csv.hpp"
#include "bbmwave/harness.hpp"
#include "bbmwave/wave_theory.hpp"

namespace {

using namespace bbmwave;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

const fs::path kSource = BBMWAVE_SOURCE_DIR;
const fs::path kScratch = fs::current_path() / "acceptance_out";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

config::ExperimentConfig shipped(const std::string& name, const fs::path& out) {
  auto cfg = config::load(kSource / "configs" / (name + ".json"));
  cfg.output_dir = out;
  cfg.validate();
  return cfg;
}

// 1: Airy kernel.
Verdict airy_kernel() {
  double worst = 0.0;
  const double h = 1e-5;
  for (double x = -20.0; x <= 12.0; x += 0.01) {
    const double second = (airy::ai_deriv(x + h) - airy::ai_deriv(x - h)) / (2 * h);
    worst = std::max(worst, std::fabs(second - x * airy::ai(x)));
  }
  const double a0 = airy::ai(0.0);
  const double d0 = airy::ai_deriv(0.0);
  const double z1 = std::round(airy::airy_zero(1) * 1000.0) / 1000.0;
  const bool ok = worst < 1e-6 && std::fabs(a0 - 0.3550280539) < 1e-9 &&
                  std::fabs(d0 + 0.2588194038) < 1e-9 && z1 == -2.338;
  return {ok, "max|Ai''-xAi|=" + fmt(worst) + " Ai(0)=" + fmt(a0) + " Ai'(0)=" + fmt(d0) +
                  " gamma1~" + fmt(z1)};
}

// 2: edge and exponent identities.
Verdict edge_identities() {
  bool ok = true;
  double worst_g = 0.0;
  double worst_t = 0.0;
  double worst_c = 0.0;
  for (auto p : {theory::ModelParams{0.1, 0.001}, theory::ModelParams{1e-4, 1e-13},
                 theory::ModelParams{0.5, 0.01}, theory::ModelParams{2.0, 0.3}}) {
    const auto e = theory::edges(p);
    const double scale = p.cubic_ratio();
    const double g = std::max(std::fabs(theory::g_of(p, e.l_star)), std::fabs(theory::g_of(p, e.l_dagger)));
    worst_g = std::max(worst_g, g / scale);
    ok = ok && g <= 1e-10 * scale;
    const double t0 = std::fabs(theory::t_of(p, 0.0) / (p.rho / p.beta) - 1);
    const double t1 = std::fabs(theory::t_of(p, e.l_dagger) / (1.5 * p.rho / p.beta) - 1);
    worst_t = std::max({worst_t, t0, t1});
    for (int i = 0; i < 20; ++i) {
      const double z = e.l_dagger + (e.l_star - e.l_dagger) * (i + 0.5) / 20.0;
      const auto c = theory::coeffs(p, z);
      const double r1 = std::fabs(c.c0 - z / e.l_star) / std::max(1.0, std::fabs(c.c0));
      const double r2 = std::fabs(c.c - std::sqrt(1 - c.c0)) / c.c;
      const double r3 = std::fabs(theory::t_of(p, z) / (c.c * p.rho / p.beta) - 1);
      const double r4 = std::fabs((e.l_star - z) / (c.c * c.c * p.rho * p.rho / (2 * p.beta)) - 1);
      worst_c = std::max({worst_c, r1, r2, r3, r4});
    }
  }
  ok = ok && worst_t < 1e-12 && worst_c < 1e-12;
  return {ok, "max|g|/(rho^3/beta)=" + fmt(worst_g) + " t rel=" + fmt(worst_t) + " c rel=" + fmt(worst_c)};
}

// 3: exact density identity at 20 points.
Verdict density_identity() {
  double worst = 0.0;
  for (auto p : {theory::ModelParams{0.1, 0.001}, theory::ModelParams{0.5, 0.01}}) {
    const auto e = theory::edges(p);
    for (int i = 0; i < 20; ++i) {
      const double z = e.l_dagger + (e.l_star - e.l_dagger) * (i + 0.5) / 20.0;
      const double t = theory::t_of(p, z);
      const double lhs = theory::mean_density(p, t, e.l_star, z);
      const double rhs = std::exp(theory::g_of(p, z)) / std::sqrt(2 * M_PI * t);
      worst = std::max(worst, std::fabs(lhs / rhs - 1));
    }
  }
  return {worst < 1e-12, "max relative error " + fmt(worst) + " over 2 x 20 points"};
}

// 4: first moment by Monte Carlo plus the deterministic dt-halving ratio.
Verdict first_moment() {
  auto cfg = shipped("first_moment", kScratch / "first_moment");
  const auto sim = harness::simulate(cfg, sim::resolve_workers(cfg.workers));
  harness::write_simulation(sim, cfg);
  const auto reports = harness::compare(cfg, sim.replicates);
  harness::write_reports(reports, cfg.output_dir);
  bool ok = !reports.empty();
  std::string detail;
  for (const auto& r : reports) {
    ok = ok && r.pass;
    detail += r.name + ": observed=" + fmt(r.observed) + " predicted=" + fmt(r.predicted);
    if (r.std_error) detail += " se=" + fmt(*r.std_error);
    detail += r.pass ? " ok; " : " FAILED; ";
  }
  return {ok, detail};
}

// 5: Figure 1 shapes and ratio band.
Verdict figure1() {
  const auto reports = harness::figure1_checks({harness::kFigureRho, harness::kFigureBeta});
  bool ok = true;
  std::string detail;
  for (const auto& r : reports) {
    if (r.mode == "gate") ok = ok && r.pass;
    detail += r.name + "=" + fmt(r.observed) + (r.pass ? "" : "(fail)") + " ";
  }
  // Same checks where the ratio band is not vacuous, for information.
  const auto extra = harness::figure1_checks({1e-4, 1e-15});
  detail += "| rho=1e-4 beta=1e-15: ";
  for (const auto& r : extra) detail += r.name + "=" + fmt(r.observed) + (r.pass ? "" : "(fail)") + " ";
  return {ok, detail};
}

// 6: normalisation over a sweep inside the asymptotic regime.
Verdict normalisation() {
  double lo = 1e9;
  double hi = -1e9;
  int n = 0;
  for (double rho : {1e-4, 0.05, 0.5, 1.0, 3.0}) {
    for (double cubic : {100.0, 125.0, 300.0, 1000.0, 5000.0}) {
      const theory::ModelParams p{rho, rho * rho * rho / cubic};
      if (!theory::diagnostics(p).asymptotic) continue;
      const double m = theory::normalization_mass(p);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
      ++n;
    }
  }
  return {n > 0 && lo >= 0.9 && hi <= 1.1,
          std::to_string(n) + " parameter sets, mass in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

// 7: wave equation and mapping.
Verdict wave() {
  double worst_res = 0.0;
  for (auto [s2, d] : {std::pair{1.0, 0.5}, std::pair{0.3, 2.0}, std::pair{0.5, 0.1}}) {
    for (int i = 0; i <= 100; ++i) {
      const double y = -5.0 + 0.1 * i;
      worst_res = std::max(worst_res, std::fabs(theory::wave_ode_residual(s2, d, 1.0, y)));
    }
  }
  double worst_ratio = 0.0;
  for (auto p : {theory::ModelParams{0.1, 0.001}, theory::ModelParams{0.5, 0.01}}) {
    const auto m = theory::wave_mapping(p);
    const auto e = theory::edges(p);
    const double ref = theory::wave_solution(m.sigma2, m.d_coeff, 1.0, 0.0) / theory::profile_airy(p, 0.0);
    for (int i = 0; i < 100; ++i) {
      const double y = e.l_dagger + (e.l_star - e.l_dagger) * i / 100.0;
      const double r = theory::wave_solution(m.sigma2, m.d_coeff, 1.0, p.beta * y) / theory::profile_airy(p, y);
      worst_ratio = std::max(worst_ratio, std::fabs(r / ref - 1));
    }
  }
  return {worst_res < 1e-8 && worst_ratio < 1e-10,
          "max residual " + fmt(worst_res) + ", max ratio deviation " + fmt(worst_ratio)};
}

// 8: ladder trends and calibrated thresholds.
Verdict ladder() {
  struct Rung {
    std::string name;
    double cubic = 0;
    std::size_t used = 0;
    double dn = NAN;
    double ks = NAN;
    double max_ratio = NAN;
    double min_ratio = NAN;
    bool gates = true;
  };
  std::vector<Rung> rungs;
  for (const char* name : {"ladder_r1", "ladder_r2", "ladder_r3"}) {
    auto cfg = shipped(name, kScratch / name);
    Rung r;
    r.name = name;
    r.cubic = cfg.rho * cfg.rho * cfg.rho / cfg.beta;
    const auto sim = harness::simulate(cfg, sim::resolve_workers(cfg.workers));
    harness::write_simulation(sim, cfg);
    if (!sim.aggregate.rows.empty()) r.used = std::stoul(sim.aggregate.rows.back()[1]);
    try {
      const auto reports = harness::compare(cfg, sim.replicates);
      harness::write_reports(reports, cfg.output_dir);
      for (const auto& rep : reports) {
        if (rep.mode == "gate" && !rep.pass) r.gates = false;
        if (rep.name.rfind("ratio_dn", 0) == 0) r.dn = rep.observed;
        if (rep.name.rfind("zeta_ks", 0) == 0) r.ks = rep.observed;
        if (rep.name.rfind("extremes max", 0) == 0) r.max_ratio = rep.observed;
        if (rep.name.rfind("extremes min", 0) == 0) r.min_ratio = rep.observed;
      }
    } catch (const harness::MissingData&) {
      r.gates = false;
    }
    rungs.push_back(r);
  }
  bool ok = true;
  std::string detail;
  for (const auto& r : rungs) {
    ok = ok && r.gates && r.used > 0;
    detail += r.name + "(rho^3/beta=" + fmt(r.cubic) + ", used=" + std::to_string(r.used) + "): D_n=" + fmt(r.dn) +
              " KS=" + fmt(r.ks) + " max/L*=" + fmt(r.max_ratio) + " min/L+=" + fmt(r.min_ratio) +
              (r.gates ? "" : " [gate failed or no data]") + "; ";
  }
  auto toward_one = [&](auto get) {
    for (std::size_t i = 1; i < rungs.size(); ++i) {
      const double a = std::fabs(get(rungs[i - 1]) - 1);
      const double b = std::fabs(get(rungs[i]) - 1);
      if (!(b <= a)) return false;
    }
    return true;
  };
  bool ks_down = true;
  for (std::size_t i = 1; i < rungs.size(); ++i) ks_down = ks_down && rungs[i].ks <= rungs[i - 1].ks;
  const bool a = toward_one([](const Rung& r) { return r.dn; });
  const bool c1 = toward_one([](const Rung& r) { return r.max_ratio; });
  const bool c2 = toward_one([](const Rung& r) { return r.min_ratio; });
  detail += std::string("trend D_n ") + (a ? "ok" : "broken") + ", KS " + (ks_down ? "ok" : "broken") +
            ", max " + (c1 ? "ok" : "broken") + ", min " + (c2 ? "ok" : "broken");
  return {ok && a && ks_down && c1 && c2, detail};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

// 9: byte-identical output trees at one and two workers.
Verdict determinism() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"smoke", "control_critical", "ladder_r1"}) {
    std::map<std::string, std::string> trees[2];
    for (int w : {1, 2}) {
      const fs::path dir = kScratch / "determinism" / (std::string(name) + "_w" + std::to_string(w));
      fs::remove_all(dir);
      auto cfg = shipped(name, dir);
      const auto sim = harness::simulate(cfg, w);
      harness::write_simulation(sim, cfg);
      if (!cfg.comparisons.empty()) harness::write_reports(harness::compare(cfg, sim.replicates), dir);
      trees[w - 1] = read_tree(dir);
    }
    const bool same = trees[0] == trees[1] && !trees[0].empty();
    ok = ok && same;
    detail += std::string(name) + (same ? " identical (" : " DIFFERS (") + std::to_string(trees[0].size()) + " files); ";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Airy kernel", airy_kernel},
      {"edge and exponent identities", edge_identities},
      {"exact density identity", density_identity},
      {"first moment", first_moment},
      {"profile figure", figure1},
      {"normalisation", normalisation},
      {"wave equation", wave},
      {"ladder properties", ladder},
      {"determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  fs::create_directories(kScratch);

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::printf("criterion %d %s: %s (%.1f s) %s\n", id, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

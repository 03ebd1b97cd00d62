#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bbmwave/config.hpp"
#include "bbmwave/csv.hpp"
#include "bbmwave/harness.hpp"

using namespace bbmwave;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_doc() {
  return json::parse(R"({
    "name": "unit",
    "model": {"rho": 0.5, "beta": 0.01},
    "sim": {"dt": 0.01, "t_end": 1, "snapshot_times": [0.5, 1]},
    "initial": {"kind": "single", "x": 0},
    "replicates": 24,
    "base_seed": 5,
    "intervals": [[-1, 1], ["-inf", "inf"]],
    "comparisons": ["first_moment", "zeta_ks", "xi_ks", "ratio_dn", "extremes"]
  })");
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bbmwave_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BBMWAVE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_json(const fs::path& p, const json& doc) {
  std::ofstream f(p);
  f << doc.dump(2);
}

}  // namespace

TEST_CASE("csv number format") {
  CHECK(csv::format_real(0.1) == "0.10000000000000001");
  CHECK(csv::format_real(1.0) == "1");
  CHECK(csv::format_real(-2.5e-300) == "-2.5e-300");
  CHECK(csv::format_real(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(csv::format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv::format_real(std::optional<double>{}).empty());
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -1e-310}) CHECK(*csv::parse_real(csv::format_real(v)) == v);
  CHECK_FALSE(csv::parse_real(""));
  CHECK(std::isinf(*csv::parse_real("-inf")));
  CHECK_THROWS(csv::parse_real("1.5x"));
}

TEST_CASE("csv tables use LF and a header row") {
  csv::Table t{{"a", "b"}, {{"1", "2"}, {"3", ""}}};
  CHECK(csv::to_string(t) == "a,b\n1,2\n3,\n");
  const auto dir = scratch("csv");
  csv::write(dir / "t.csv", t);
  std::ifstream f(dir / "t.csv", std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str().find('\r') == std::string::npos);
  const auto back = csv::read(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("c"), std::out_of_range);
}

TEST_CASE("config parsing") {
  const auto cfg = config::parse(small_doc());
  CHECK(cfg.rho == 0.5);
  CHECK(cfg.replicates == 24);
  REQUIRE(cfg.intervals.size() == 2);
  CHECK(std::isinf(cfg.intervals[1].lo));
  CHECK(cfg.intervals[1].lo < 0);
  CHECK(cfg.comparisons.count(config::Comparison::xi_ks));
  CHECK(cfg.model());
  CHECK_FALSE(cfg.sim_config().barrier);

  auto doc = small_doc();
  doc["sim"]["barrier"] = "L";
  doc["comparisons"] = json::array({"xi_ks"});
  const auto with_barrier = config::parse(doc);
  CHECK(*with_barrier.sim_config().barrier == doctest::Approx(theory::edges({0.5, 0.01}).l_right));

  const auto round_trip = config::parse(config::to_json(cfg));
  CHECK(config::to_json(round_trip) == config::to_json(cfg));
}

TEST_CASE("config errors") {
  auto bad = [](auto&& edit) {
    auto doc = small_doc();
    edit(doc);
    return doc;
  };
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["colour"] = 1; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d.erase("model"); })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["model"]["rho"] = "fast"; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["sim"]["dt"] = 1.0; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["replicates"] = 0; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["intervals"] = json::parse("[[1, -1]]"); })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["comparisons"] = json::array({"vibes"}); })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["thresholds"] = json::parse(R"({"bogus": {"lo": 0, "hi": 1}})"); })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["thresholds"] = json::parse(R"({"xi_ks": {"lo": 1, "hi": 0}})"); })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["model"]["rates"] = json::parse(R"({"kind": "constant", "birth": 1, "death": 1})"); })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["model"]["beta"] = 0; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) { d["sim"]["barrier"] = "M"; })), config::ConfigError);
  CHECK_THROWS_AS(config::parse(bad([](json& d) {
                    d["sim"]["barrier"] = 3.0;
                    d["comparisons"] = json::array({"first_moment"});
                  })),
                  config::ConfigError);
  CHECK_THROWS_AS(config::load("/nonexistent/bbmwave.json"), config::ConfigError);
}

TEST_CASE("simulation output is identical for every worker count") {
  const auto cfg = config::parse(small_doc());
  const auto one = harness::simulate(cfg, 1);
  const auto three = harness::simulate(cfg, 3);
  CHECK(csv::to_string(one.replicates) == csv::to_string(three.replicates));
  CHECK(csv::to_string(one.aggregate) == csv::to_string(three.aggregate));
  CHECK(one.replicates.rows.size() == 48);
  CHECK(one.replicates.header.front() == "replicate");
  CHECK(one.aggregate.rows.size() == 2);
  CHECK(one.explosions.rows.empty());
}

TEST_CASE("exploding replicates are set aside") {
  auto doc = small_doc();
  doc["sim"]["max_particles"] = 2;
  const auto out = harness::simulate(config::parse(doc), 1);
  CHECK(out.explosions.rows.size() > 0);
  const std::size_t used = std::stoul(out.aggregate.rows.empty() ? "0" : out.aggregate.rows[0][1]);
  CHECK(used + out.explosions.rows.size() == 24);
}

TEST_CASE("comparison reports") {
  auto cfg = config::parse(small_doc());
  const auto sim = harness::simulate(cfg, 1);
  const auto reports = harness::compare(cfg, sim.replicates);
  // first_moment: 2 snapshots x 2 intervals; then ratio, zeta, xi, max and min.
  CHECK(reports.size() == 9);
  for (const auto& r : reports) {
    if (r.name.rfind("first_moment", 0) == 0) {
      CHECK(r.mode == "gate");
      CHECK(r.std_error);
    } else {
      CHECK(r.mode == "monitor");
      CHECK(r.pass);
    }
  }
  cfg.thresholds["zeta_ks"] = {0.0, 0.0};
  const auto gated = harness::compare(cfg, sim.replicates);
  const auto dir = scratch("reports");
  CHECK(harness::write_reports(gated, dir) == harness::kComparisonFailure);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "report.json"));

  cfg.comparisons.clear();
  const auto none = harness::compare(cfg, {});
  CHECK(none.empty());
  CHECK(harness::write_reports(none, dir) == harness::kOk);
  CHECK(csv::read(dir / "report.csv").rows.empty());

  auto needs_data = config::parse(small_doc());
  CHECK_THROWS_AS(harness::compare(needs_data, csv::Table{{"replicate"}, {}}), harness::MissingData);
  needs_data.output_dir = scratch("missing");
  CHECK_THROWS_AS(harness::load_replicates(needs_data), harness::MissingData);
}

TEST_CASE("profile helpers") {
  const auto g = harness::linear_grid(-1, 1, 5);
  CHECK(g == std::vector<double>{-1, -0.5, 0, 0.5, 1});
  CHECK(harness::count_valleys({1, 2, 3, 2, 1}) == 0);
  CHECK(harness::count_valleys({1, 2, 1, 2, 1}) == 1);
  CHECK(harness::count_valleys({3, 3, 3}) == 0);
  CHECK(harness::median({3, 1, 2}) == 2);
  CHECK(harness::median({4, 1, 2, 3}) == 2.5);
  CHECK(std::isnan(harness::median({})));
  const auto t = harness::figure1_table(11);
  CHECK(t.header == std::vector<std::string>{"y", "f", "f_airy", "f_gauss"});
  CHECK(t.rows.size() == 11);
  const auto text = harness::edges_text({0.1, 0.001});
  CHECK(text.find("l_star") != std::string::npos);
  CHECK(text.find("5,") != std::string::npos);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  CHECK(run_cli("edges --rho 0.1 --beta 0.001") == 0);
  CHECK(run_cli("edges --rho 0.1") == 2);
  CHECK(run_cli("edges --rho 0 --beta 0.001") == 2);
  CHECK(run_cli("nonsense") == 2);
  CHECK(run_cli("simulate " + (dir / "absent.json").string()) == 2);

  auto doc = small_doc();
  doc["output_dir"] = (dir / "out").string();
  write_json(dir / "cfg.json", doc);
  CHECK(run_cli("compare " + (dir / "cfg.json").string()) == 3);
  CHECK(run_cli("simulate " + (dir / "cfg.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "replicates.csv"));
  CHECK(fs::exists(dir / "out" / "aggregate.csv"));
  CHECK(fs::exists(dir / "out" / "explosions.csv"));
  CHECK(fs::exists(dir / "out" / "config.json"));

  doc["thresholds"] = json::parse(R"({"zeta_ks": {"lo": 0, "hi": 0}})");
  write_json(dir / "gated.json", doc);
  CHECK(run_cli("compare " + (dir / "gated.json").string()) == 1);

  doc["sim"]["dt"] = "small";
  write_json(dir / "broken.json", doc);
  CHECK(run_cli("simulate " + (dir / "broken.json").string()) == 2);

  CHECK(run_cli("profile --rho 0.1 --beta 0.001 --points 3 --out " + (dir / "p.csv").string()) == 0);
  CHECK(csv::read(dir / "p.csv").rows.size() == 3);
  CHECK(run_cli("profile --rho 0.1 --beta 0.001 --curves bogus") == 2);
}

TEST_CASE("worker environment variable is honoured by the command line") {
  const auto dir = scratch("env");
  auto doc = small_doc();
  doc["output_dir"] = (dir / "a").string();
  write_json(dir / "a.json", doc);
  doc["output_dir"] = (dir / "b").string();
  write_json(dir / "b.json", doc);
  CHECK(run_cli("simulate " + (dir / "a.json").string() + " --workers 1") == 0);
  CHECK(std::system(("BBMWAVE_WORKERS=2 " + std::string(BBMWAVE_CLI) + " simulate " + (dir / "b.json").string() +
                     " >/dev/null 2>&1")
                        .c_str()) == 0);
  std::ifstream a(dir / "a" / "replicates.csv", std::ios::binary);
  std::ifstream b(dir / "b" / "replicates.csv", std::ios::binary);
  std::stringstream sa;
  std::stringstream sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(std::system(("BBMWAVE_WORKERS=abc " + std::string(BBMWAVE_CLI) + " simulate " +
                     (dir / "b.json").string() + " >/dev/null 2>&1")
                        .c_str()) != 0);
}

#include "bbmwave/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace bbmwave::config {
namespace {

using nlohmann::json;

const std::set<std::string> kThresholdNames = {"ratio_dn", "zeta_ks", "xi_ks", "extremes_max",
                                               "extremes_min"};

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(where + ": expected a number");
}

template <class T>
T integer(const json& v, const std::string& where) {
  if (v.is_number_integer() || v.is_number_unsigned()) {
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
      throw ConfigError(where + ": must be >= 0");
    }
    return v.get<T>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<T>(d);
  }
  throw ConfigError(where + ": expected a non-negative integer");
}

json real_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

}  // namespace

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::first_moment: return "first_moment";
    case Comparison::figure1: return "figure1";
    case Comparison::ratio_dn: return "ratio_dn";
    case Comparison::zeta_ks: return "zeta_ks";
    case Comparison::xi_ks: return "xi_ks";
    case Comparison::extremes: return "extremes";
  }
  return "unknown";
}

Comparison comparison_from_string(const std::string& s) {
  for (auto c : {Comparison::first_moment, Comparison::figure1, Comparison::ratio_dn,
                 Comparison::zeta_ks, Comparison::xi_ks, Comparison::extremes}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("unknown comparison '" + s + "'");
}

std::optional<theory::ModelParams> ExperimentConfig::model() const {
  if (beta > 0.0) return theory::ModelParams{rho, beta, alpha};
  return std::nullopt;
}

sim::RateFamily ExperimentConfig::rate_family() const {
  if (rates == "canonical") return sim::RateFamily::canonical(beta);
  return sim::RateFamily::constant(birth, death);
}

sim::SimConfig ExperimentConfig::sim_config() const {
  sim::SimConfig c;
  c.rho = rho;
  c.beta = beta;
  c.rates = rate_family();
  c.dt = dt;
  c.t_end = t_end;
  c.snapshot_times = snapshot_times;
  c.max_particles = max_particles;
  c.max_particle_steps = max_particle_steps;
  c.seed = base_seed;
  if (barrier) {
    if (*barrier == "L") {
      c.barrier = theory::edges(*model()).l_right;
    } else {
      c.barrier = std::stod(*barrier);
    }
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (!(std::isfinite(rho) && rho >= 0.0)) throw ConfigError("model.rho must be finite and >= 0");
  if (!(std::isfinite(beta) && beta >= 0.0)) throw ConfigError("model.beta must be finite and >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("model.alpha must lie in (0, 1)");
  if (rates != "canonical" && rates != "constant") {
    throw ConfigError("model.rates.kind must be 'canonical' or 'constant'");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (auto m = model()) {
    try {
      m->validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const bool needs_model = comparisons.count(Comparison::ratio_dn) ||
                           comparisons.count(Comparison::zeta_ks) ||
                           comparisons.count(Comparison::xi_ks) ||
                           comparisons.count(Comparison::extremes) ||
                           comparisons.count(Comparison::figure1) ||
                           initial.kind == InitialSpec::Kind::airy ||
                           (barrier && *barrier == "L");
  if (needs_model && !model()) throw ConfigError("this config needs rho > 0 and beta > 0");
  if (rates == "canonical" && model()) {
    // The canonical family must honour the rate constraints on the working window.
    try {
      const auto [lo, hi] = sim_config().working_window();
      rate_family().validate(lo, hi);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (rates == "constant" && (birth != death || beta != 0.0)) {
    throw ConfigError("constant rates need birth == death and beta = 0 (b - d = beta x)");
  }
  if (comparisons.count(Comparison::first_moment) && initial.kind != InitialSpec::Kind::single) {
    throw ConfigError("first_moment needs a single initial particle");
  }
  if (comparisons.count(Comparison::first_moment) && barrier) {
    throw ConfigError("first_moment compares the free process; remove the barrier");
  }
  for (const auto& q : intervals) {
    try {
      q.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (comparisons.count(Comparison::ratio_dn) && ratio_interval >= intervals.size()) {
    throw ConfigError("ratio_interval does not name a configured interval");
  }
  for (const auto& [k, band] : thresholds) {
    if (!kThresholdNames.count(k)) throw ConfigError("unknown threshold '" + k + "'");
    if (!(band.lo <= band.hi)) throw ConfigError("threshold '" + k + "' needs lo <= hi");
  }
  if (barrier && *barrier != "L") {
    try {
      std::size_t used = 0;
      (void)std::stod(*barrier, &used);
      if (used != barrier->size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ConfigError("sim.barrier must be null, \"L\" or a number");
    }
  }
  try {
    sim_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc,
            {"name", "model", "sim", "initial", "replicates", "base_seed", "intervals",
             "comparisons", "output_dir", "workers", "ratio_interval", "thresholds",
             "first_moment"},
            "config");
  ExperimentConfig c;
  try {
    c.name = doc.value("name", std::string{});
    if (!doc.contains("model")) throw ConfigError("config: missing 'model'");
    const auto& m = doc.at("model");
    only_keys(m, {"rho", "beta", "alpha", "rates"}, "model");
    if (!m.contains("rho") || !m.contains("beta")) throw ConfigError("model: rho and beta required");
    c.rho = number(m.at("rho"), "model.rho");
    c.beta = number(m.at("beta"), "model.beta");
    if (m.contains("alpha")) c.alpha = number(m.at("alpha"), "model.alpha");
    if (m.contains("rates")) {
      const auto& r = m.at("rates");
      only_keys(r, {"kind", "birth", "death"}, "model.rates");
      c.rates = r.value("kind", std::string{"canonical"});
      if (r.contains("birth")) c.birth = number(r.at("birth"), "model.rates.birth");
      if (r.contains("death")) c.death = number(r.at("death"), "model.rates.death");
    }

    if (!doc.contains("sim")) throw ConfigError("config: missing 'sim'");
    const auto& s = doc.at("sim");
    only_keys(s, {"dt", "t_end", "snapshot_times", "barrier", "max_particles", "max_particle_steps"},
              "sim");
    if (!s.contains("dt") || !s.contains("t_end")) throw ConfigError("sim: dt and t_end required");
    c.dt = number(s.at("dt"), "sim.dt");
    c.t_end = number(s.at("t_end"), "sim.t_end");
    if (s.contains("snapshot_times")) {
      for (const auto& t : s.at("snapshot_times")) c.snapshot_times.push_back(number(t, "sim.snapshot_times"));
    } else {
      c.snapshot_times = {c.t_end};
    }
    if (s.contains("barrier") && !s.at("barrier").is_null()) {
      const auto& b = s.at("barrier");
      if (b.is_string()) {
        c.barrier = b.get<std::string>();
      } else {
        c.barrier = nlohmann::json(number(b, "sim.barrier")).dump();
      }
    }
    if (s.contains("max_particles")) c.max_particles = integer<std::size_t>(s.at("max_particles"), "sim.max_particles");
    if (s.contains("max_particle_steps")) {
      c.max_particle_steps = integer<std::uint64_t>(s.at("max_particle_steps"), "sim.max_particle_steps");
    }

    if (doc.contains("initial")) {
      const auto& i = doc.at("initial");
      only_keys(i, {"kind", "x"}, "initial");
      const auto kind = i.value("kind", std::string{"single"});
      if (kind == "single") {
        c.initial.kind = InitialSpec::Kind::single;
        if (i.contains("x")) c.initial.x = number(i.at("x"), "initial.x");
      } else if (kind == "airy") {
        c.initial.kind = InitialSpec::Kind::airy;
      } else {
        throw ConfigError("initial.kind must be 'single' or 'airy'");
      }
    }
    if (doc.contains("replicates")) c.replicates = integer<std::size_t>(doc.at("replicates"), "replicates");
    if (doc.contains("base_seed")) c.base_seed = integer<std::uint64_t>(doc.at("base_seed"), "base_seed");
    if (doc.contains("intervals")) {
      for (const auto& q : doc.at("intervals")) {
        if (!q.is_array() || q.size() != 2) throw ConfigError("intervals: each entry is [lo, hi]");
        c.intervals.push_back({number(q[0], "intervals"), number(q[1], "intervals")});
      }
    }
    if (doc.contains("comparisons")) {
      for (const auto& name : doc.at("comparisons")) {
        if (!name.is_string()) throw ConfigError("comparisons: expected names");
        c.comparisons.insert(comparison_from_string(name.get<std::string>()));
      }
    }
    if (doc.contains("output_dir")) {
      std::filesystem::path p = doc.at("output_dir").get<std::string>();
      c.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (doc.contains("workers")) c.workers = integer<int>(doc.at("workers"), "workers");
    if (doc.contains("ratio_interval")) {
      c.ratio_interval = integer<std::size_t>(doc.at("ratio_interval"), "ratio_interval");
    }
    if (doc.contains("thresholds")) {
      for (const auto& [k, v] : doc.at("thresholds").items()) {
        only_keys(v, {"lo", "hi"}, "thresholds." + k);
        if (!v.contains("lo") || !v.contains("hi")) throw ConfigError("thresholds." + k + ": lo and hi required");
        c.thresholds[k] = {number(v.at("lo"), "thresholds"), number(v.at("hi"), "thresholds")};
      }
    }
    if (doc.contains("first_moment")) {
      const auto& f = doc.at("first_moment");
      only_keys(f, {"dt_halving"}, "first_moment");
      c.dt_halving = f.value("dt_halving", false);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  // Relative output directories are taken from the working directory.
  return parse(doc, {});
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["name"] = c.name;
  doc["model"] = {{"rho", c.rho}, {"beta", c.beta}, {"alpha", c.alpha}};
  doc["model"]["rates"] = {{"kind", c.rates}};
  if (c.rates == "constant") {
    doc["model"]["rates"]["birth"] = c.birth;
    doc["model"]["rates"]["death"] = c.death;
  }
  doc["sim"] = {{"dt", c.dt},
                {"t_end", c.t_end},
                {"snapshot_times", c.snapshot_times},
                {"max_particles", c.max_particles},
                {"max_particle_steps", c.max_particle_steps}};
  doc["sim"]["barrier"] = c.barrier ? json(*c.barrier) : json(nullptr);
  doc["initial"] = {{"kind", c.initial.kind == InitialSpec::Kind::single ? "single" : "airy"}};
  if (c.initial.kind == InitialSpec::Kind::single) doc["initial"]["x"] = c.initial.x;
  doc["replicates"] = c.replicates;
  doc["base_seed"] = c.base_seed;
  doc["intervals"] = json::array();
  for (const auto& q : c.intervals) doc["intervals"].push_back({real_to_json(q.lo), real_to_json(q.hi)});
  doc["comparisons"] = json::array();
  for (auto cmp : c.comparisons) doc["comparisons"].push_back(to_string(cmp));
  doc["ratio_interval"] = c.ratio_interval;
  doc["thresholds"] = json::object();
  for (const auto& [k, b] : c.thresholds) doc["thresholds"][k] = {{"lo", b.lo}, {"hi", b.hi}};
  doc["first_moment"] = {{"dt_halving", c.dt_halving}};
  return doc;
}

}  // namespace bbmwave::config

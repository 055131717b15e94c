#include "geoq/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace geoq {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(e.what());
  }
  if (!doc.is_object()) bad("top-level value must be an object");
  for (const auto& [key, _] : doc.items()) {
    static const char* known[] = {"n_servers", "arrival_rate", "service_prob", "arrival_kind",
                                  "pmf",       "regime",       "beta",         "gamma",
                                  "s",         "multipliers"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) bad("unknown field '" + key + "'");
  }
  for (const char* k : {"n_servers", "arrival_rate", "service_prob"})
    if (!doc.contains(k)) bad(std::string("missing required field '") + k + "'");

  QueueParams params;
  try {
    params = QueueParams::make(doc["n_servers"].get<int>(), doc["arrival_rate"].get<double>(),
                               doc["service_prob"].get<double>());
  } catch (const json::exception& e) {
    bad(e.what());
  }

  const std::string kind = doc.value("arrival_kind", "poisson");
  ArrivalModel arrivals = ArrivalModel::poisson(params.arrival_rate);
  if (kind == "general") {
    if (!doc.contains("pmf")) bad("arrival_kind 'general' requires a 'pmf' array");
    arrivals = ArrivalModel::general(doc["pmf"].get<std::vector<double>>());
    arrivals.require_paired(params);
  } else if (kind != "poisson") {
    bad("arrival_kind must be 'poisson' or 'general'");
  } else if (doc.contains("pmf")) {
    bad("'pmf' is only valid with arrival_kind 'general'");
  }

  ScenarioConfig cfg{params, std::move(arrivals), std::nullopt};
  if (doc.contains("regime")) {
    const auto regime = parse_regime(doc["regime"].get<std::string>());
    if (!regime) bad("regime must be one of qd, qed, nds");
    RegimeSpec rs;
    rs.regime = *regime;
    rs.beta = doc.contains("beta") ? doc["beta"].get<double>()
                                   : beta_from_base(*regime, params);
    rs.s_exponent = doc.value("s", 0.0);
    if (doc.contains("gamma")) rs.gamma = doc["gamma"].get<double>();
    if (!doc.contains("multipliers")) bad("a regime sweep requires 'multipliers'");
    rs.load_multipliers = doc["multipliers"].get<std::vector<double>>();
    cfg.sweep = std::move(rs);
  } else {
    for (const char* k : {"beta", "gamma", "s", "multipliers"})
      if (doc.contains(k)) bad(std::string("'") + k + "' requires 'regime'");
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) bad("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str());
}

void write_pmf_csv(const StationaryPMF& pmf, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "state,probability\n";
  for (std::size_t n = 0; n < pmf.probs.size(); ++n) out << n << ',' << fmt(pmf.probs[n]) << '\n';
}

void write_pmf_meta(const StationaryPMF& pmf, const std::filesystem::path& file) {
  ordered_json meta;
  meta["K"] = pmf.probs.size() - 1;
  meta["residual"] = pmf.residual;
  meta["tolerance"] = pmf.tolerance;
  meta["iterations"] = pmf.iterations;
  meta["truncation_mass"] = pmf.truncation_mass;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << meta.dump(2) << '\n';
}

void write_density_csv(const DiffusionDensity& density, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "x,p,F\n";
  for (std::size_t i = 0; i < density.grid.size(); ++i)
    out << fmt(density.grid[i]) << ',' << fmt(density.pdf(i)) << ',' << fmt(density.cdf[i])
        << '\n';
}

void write_sim_csv(const SimResult& result, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "state,probability,half_width\n";
  for (std::size_t n = 0; n < result.histogram.size(); ++n)
    out << n << ',' << fmt(result.histogram[n]) << ',' << fmt(result.histogram_half_width[n])
        << '\n';
}

void write_sim_meta(const SimResult& result, const std::filesystem::path& file) {
  ordered_json meta;
  meta["rng"] = result.rng;
  meta["seed"] = result.seed;
  meta["replications"] = result.replications;
  meta["warmup_epochs"] = result.warmup_epochs;
  meta["sample_epochs"] = result.sample_epochs;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << meta.dump(2) << '\n';
}

}  // namespace geoq

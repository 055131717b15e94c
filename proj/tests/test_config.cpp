#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "geoq/config.hpp"
#include "test_util.hpp"

using namespace geoq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int line_count(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("poisson scenario parses with defaults") {
  const auto cfg = parse_scenario_config(
      R"({"n_servers": 18, "arrival_rate": 3.0566, "service_prob": 0.1887})");
  CHECK(cfg.params.n_servers == 18);
  CHECK(cfg.params.arrival_rate == doctest::Approx(3.0566));
  CHECK(cfg.arrivals.c_a() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(!cfg.sweep.has_value());
}

TEST_CASE("general scenario requires and consumes a pmf") {
  const auto cfg = parse_scenario_config(
      R"({"n_servers": 4, "arrival_rate": 1.7, "service_prob": 0.5,
          "arrival_kind": "general", "pmf": [0.1, 0.3, 0.4, 0.2]})");
  CHECK(cfg.arrivals.mean() == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(cfg.arrivals.variance() == doctest::Approx(0.81).epsilon(1e-12));

  CHECK_THROWS_AS(parse_scenario_config(
                      R"({"n_servers": 4, "arrival_rate": 1.7, "service_prob": 0.5,
                          "arrival_kind": "general"})"),
                  std::invalid_argument);
  // pmf mean must pair with the declared arrival rate
  CHECK_THROWS_AS(parse_scenario_config(
                      R"({"n_servers": 4, "arrival_rate": 1.0, "service_prob": 0.5,
                          "arrival_kind": "general", "pmf": [0.1, 0.3, 0.4, 0.2]})"),
                  std::invalid_argument);
}

TEST_CASE("sweep recipes parse with a defaulted beta") {
  const auto cfg = parse_scenario_config(
      R"({"n_servers": 18, "arrival_rate": 3.0566, "service_prob": 0.1887,
          "regime": "nds", "multipliers": [1, 2, 4]})");
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->regime == Regime::NDS);
  CHECK(cfg.sweep->load_multipliers.size() == 3);
  CHECK(cfg.sweep->beta == doctest::Approx(beta_from_base(Regime::NDS, cfg.params)));

  CHECK_THROWS_AS(parse_scenario_config(
                      R"({"n_servers": 18, "arrival_rate": 3.0566,
                          "service_prob": 0.1887, "regime": "nds"})"),
                  std::invalid_argument);
}

TEST_CASE("malformed configs carry a config diagnostic") {
  const char* bad[] = {
      "not json",
      R"({"arrival_rate": 1.0, "service_prob": 0.5})",
      R"({"n_servers": 18, "arrival_rate": 3.0566, "service_prob": 0.1887, "typo": 1})",
      R"({"n_servers": 4, "arrival_rate": 1.7, "service_prob": 0.5, "pmf": [1.0]})",
      R"({"n_servers": 4, "arrival_rate": 1.7, "service_prob": 0.5, "arrival_kind": "weird"})",
      R"({"n_servers": 2, "arrival_rate": 5.0, "service_prob": 0.5})",
  };
  for (const char* text : bad) {
    INFO(text);
    try {
      parse_scenario_config(text);
      FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("config") != std::string::npos);
    }
  }
}

TEST_CASE("config loads from disk identically to the in-memory parse") {
  const fs::path file = fs::temp_directory_path() / "geoq-test-cfg.json";
  std::ofstream(file) << R"({"n_servers": 18, "arrival_rate": 3.0566, "service_prob": 0.1887})";
  const auto cfg = load_scenario_config(file);
  CHECK(cfg.params.n_servers == 18);
  fs::remove(file);
  CHECK_THROWS(load_scenario_config(file));
}

TEST_CASE("pmf, density and sim writers emit well-formed files") {
  const double mu = 1.0 / 5.3;
  const auto p = QueueParams::make(18, 16.2 * mu, mu);
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const fs::path dir = fs::temp_directory_path() / "geoq-test-writers";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto pmf = solve_auto(p, arr);
  write_pmf_csv(pmf, dir / "pmf.csv");
  write_pmf_meta(pmf, dir / "pmf.meta");
  const auto pmf_text = slurp(dir / "pmf.csv");
  CHECK(pmf_text.rfind("state,probability", 0) == 0);
  CHECK(line_count(pmf_text) == static_cast<int>(pmf.probs.size()) + 1);
  const auto meta = slurp(dir / "pmf.meta");
  CHECK(meta.find("residual") != std::string::npos);
  CHECK(meta.find("iterations") != std::string::npos);

  const auto dens = build_density(p, arr, DensityVariant::StateDependent);
  write_density_csv(dens, dir / "density.csv");
  const auto dens_text = slurp(dir / "density.csv");
  CHECK(dens_text.rfind("x,p,F", 0) == 0);
  CHECK(line_count(dens_text) == static_cast<int>(dens.grid.size()) + 1);

  SimConfig scfg;
  scfg.sample_epochs = 2000;
  scfg.replications = 2;
  scfg.seed = 5;
  const auto sim = simulate_census(p, arr, scfg);
  write_sim_csv(sim, dir / "sim.csv");
  write_sim_meta(sim, dir / "sim.meta");
  const auto sim_text = slurp(dir / "sim.csv");
  CHECK(sim_text.rfind("state,probability,half_width", 0) == 0);
  CHECK(line_count(sim_text) == static_cast<int>(sim.histogram.size()) + 1);
  const auto smeta = slurp(dir / "sim.meta");
  CHECK(smeta.find("mt19937_64") != std::string::npos);
  CHECK(smeta.find("seed") != std::string::npos);

  fs::remove_all(dir);
}

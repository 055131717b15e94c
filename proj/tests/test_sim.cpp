#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "geoq/markov.hpp"
#include "geoq/sim.hpp"
#include "test_util.hpp"

using namespace geoq;

namespace {

QueueParams ward18() {
  const double mu = 1.0 / 5.3;
  return QueueParams::make(18, 16.2 * mu, mu);
}

double tv_to(const SimResult& sim, const StationaryPMF& pmf) {
  double tv = 0;
  const std::size_t n = std::max(sim.histogram.size(), pmf.probs.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < sim.histogram.size() ? sim.histogram[i] : 0.0;
    const double b = i < pmf.probs.size() ? pmf.probs[i] : 0.0;
    tv += std::abs(a - b);
  }
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("same seed reproduces the run bit for bit") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  SimConfig cfg;
  cfg.sample_epochs = 4000;
  cfg.replications = 4;
  cfg.seed = 42;
  const auto a = simulate_census(p, arr, cfg);
  const auto b = simulate_census(p, arr, cfg);
  CHECK(a.histogram == b.histogram);
  CHECK(a.metrics.queue_len == b.metrics.queue_len);
  CHECK(a.half_width.queue_len == b.half_width.queue_len);

  cfg.jobs = 4;  // worker count must not change the stream assignment
  const auto c = simulate_census(p, arr, cfg);
  CHECK(a.histogram == c.histogram);
  CHECK(a.metrics.queue_len == c.metrics.queue_len);

  cfg.jobs = 1;
  cfg.seed = 43;
  const auto d = simulate_census(p, arr, cfg);
  CHECK(a.histogram != d.histogram);
}

TEST_CASE("histogram is a probability distribution with uncertainty bands") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  SimConfig cfg;
  cfg.sample_epochs = 20000;
  cfg.replications = 5;
  cfg.seed = 7;
  const auto r = simulate_census(p, arr, cfg);
  const double total = std::accumulate(r.histogram.begin(), r.histogram.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.histogram_half_width.size() == r.histogram.size());
  for (double hw : r.histogram_half_width) CHECK(hw >= 0);
  CHECK(r.replications == 5);
  CHECK(r.sample_epochs == 20000);
  CHECK(r.warmup_epochs == static_cast<long>(std::ceil(50.0 / p.service_prob)));
  CHECK(r.rng == "mt19937_64");
}

TEST_CASE("a long run brackets the exact census metrics") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto exact = exact_metrics(solve_auto(p, arr), p);

  SimConfig cfg;
  cfg.sample_epochs = 100000;
  cfg.replications = 10;
  cfg.seed = 2024;
  cfg.jobs = 4;
  const auto r = simulate_census(p, arr, cfg);
  CHECK_ABS(exact.queue_len, 4.65, 0.02);
  CHECK(std::abs(r.metrics.queue_len - exact.queue_len) <= r.half_width.queue_len);
  CHECK(std::abs(r.metrics.busy - exact.busy) <= r.half_width.busy);
  CHECK(std::abs(r.metrics.idle_prob - exact.idle_prob) <= r.half_width.idle_prob);

  // flow balance holds for the simulated chain too
  CHECK(std::abs(p.service_prob * r.metrics.busy - p.arrival_rate) <=
        p.service_prob * r.half_width.busy + 1e-12);
}

TEST_CASE("the empirical law converges toward the solved chain") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto pmf = solve_auto(p, arr);

  SimConfig small;
  small.sample_epochs = 10000;
  small.replications = 4;
  small.seed = 99;
  SimConfig big = small;
  big.sample_epochs = 160000;
  const double tv_small = tv_to(simulate_census(p, arr, small), pmf);
  const double tv_big = tv_to(simulate_census(p, arr, big), pmf);
  CHECK(tv_big < tv_small);
  CHECK(tv_big < 0.02);
}

TEST_CASE("undersized sampling budgets are rejected") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  SimConfig cfg;
  cfg.sample_epochs = 500;
  CHECK_THROWS_AS(simulate_census(p, arr, cfg), std::invalid_argument);
}

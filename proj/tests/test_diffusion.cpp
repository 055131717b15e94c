#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "geoq/diffusion.hpp"
#include "test_util.hpp"

using namespace geoq;

namespace {

QueueParams ward18() {
  const double mu = 1.0 / 5.3;
  return QueueParams::make(18, 16.2 * mu, mu);
}

// Closed-form antiderivative of 2b/a on the quadratic piece [-sqrt(R), -zeta]:
// with a(y)/mu = P(y) = mu y^2 + p y + q, p = delta(1-mu), q = c - mu,
//   int -2y/P dy = -(1/mu) ln P(y) + (p/mu) * (2/sqrt(-D)) atan((2 mu y + p)/sqrt(-D))
// where D = p^2 - 4 mu q < 0.
double middle_phi(double y, const QueueParams& prm, double c) {
  const double mu = prm.service_prob;
  const double p = prm.delta * (1.0 - mu);
  const double q = c - mu;
  const double disc = p * p - 4.0 * mu * q;
  REQUIRE(disc < 0);
  const double s = std::sqrt(-disc);
  const double pv = mu * y * y + p * y + q;
  return -(1.0 / mu) * std::log(pv) + (p / mu) * (2.0 / s) * std::atan((2.0 * mu * y + p) / s);
}

double node_pdf(const DiffusionDensity& d, double x) {
  auto it = std::lower_bound(d.grid.begin(), d.grid.end(), x - 1e-9);
  REQUIRE(it != d.grid.end());
  REQUIRE(std::abs(*it - x) < 1e-6);
  return d.pdf(it - d.grid.begin());
}

}  // namespace

TEST_CASE("density is normalized with a nondecreasing cdf") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  for (auto variant : {DensityVariant::StateDependent, DensityVariant::ConstantCoeff}) {
    const auto d = build_density(p, arr, variant);
    REQUIRE(d.grid.size() > 100);
    CHECK(std::is_sorted(d.grid.begin(), d.grid.end()));
    CHECK(d.cdf.back() == 1.0);
    CHECK(std::is_sorted(d.cdf.begin(), d.cdf.end()));
    for (std::size_t i = 0; i < d.grid.size(); ++i) CHECK(d.pdf(i) > 0);

    // independent composite-Simpson pass over node values only
    double integral = 0;
    for (std::size_t i = 0; i + 2 < d.grid.size(); i += 2) {
      const double h1 = d.grid[i + 1] - d.grid[i], h2 = d.grid[i + 2] - d.grid[i + 1];
      if (std::abs(h1 - h2) > 1e-12 * (h1 + h2)) {  // piece boundary, fall back
        integral += 0.5 * h1 * (d.pdf(i) + d.pdf(i + 1));
        integral += 0.5 * h2 * (d.pdf(i + 1) + d.pdf(i + 2));
        continue;
      }
      integral += (h1 + h2) / 6.0 * (d.pdf(i) + 4.0 * d.pdf(i + 1) + d.pdf(i + 2));
    }
    if (d.grid.size() % 2 == 0) {
      const std::size_t i = d.grid.size() - 2;
      integral += 0.5 * (d.grid[i + 1] - d.grid[i]) * (d.pdf(i) + d.pdf(i + 1));
    }
    CHECK_ABS(integral, 1.0, 1e-7);
  }
}

TEST_CASE("constant-coefficient density has a gaussian left piece") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto d = build_density(p, arr, DensityVariant::ConstantCoeff);
  const double kink = -p.zeta;

  // ratio p(x1)/p(x2) = exp((x2^2 - x1^2)/2) for x1, x2 <= -zeta
  std::vector<std::size_t> left;
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    if (d.grid[i] < kink - 0.2 && d.grid[i] > d.grid.front() + 0.5) left.push_back(i);
  REQUIRE(left.size() > 10);
  for (std::size_t k = 0; k + 7 < left.size(); k += left.size() / 7) {
    const std::size_t i = left[k], j = left[k + 7];
    const double want = std::exp((d.grid[j] * d.grid[j] - d.grid[i] * d.grid[i]) / 2.0);
    CHECK(d.pdf(i) / d.pdf(j) == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("constant-coefficient density decays log-linearly right of the kink") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto d = build_density(p, arr, DensityVariant::ConstantCoeff);
  const double kink = -p.zeta;

  std::vector<std::size_t> right;
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    if (d.grid[i] > kink + 0.1) right.push_back(i);
  REQUIRE(right.size() > 10);
  for (std::size_t k = 0; k + 2 < right.size(); k += 25) {
    const std::size_t i = right[k], j = right[k + 2];
    const double slope = (d.log_unnormalized[j] - d.log_unnormalized[i]) / (d.grid[j] - d.grid[i]);
    CHECK(slope == doctest::Approx(p.zeta).epsilon(1e-7));
  }
}

TEST_CASE("accumulated exponent matches the closed form on the quadratic piece") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto d = build_density(p, arr, DensityVariant::StateDependent);
  const double c = arr.c_a();
  const double mu = p.service_prob;

  // recover Phi at nodes from the stored log and compare increments
  auto phi_at = [&](std::size_t i) {
    return d.log_unnormalized[i] + std::log(diffusion_a(d.grid[i], p, arr));
  };
  std::vector<std::size_t> mid;
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    if (d.grid[i] > -1.0 / p.delta + 1e-9 && d.grid[i] < -p.zeta - 1e-9) mid.push_back(i);
  REQUIRE(mid.size() > 50);
  const std::size_t a = mid.front(), b = mid.back();
  const double want = middle_phi(d.grid[b], p, c) - middle_phi(d.grid[a], p, c);
  CHECK_ABS(phi_at(b) - phi_at(a), want, 1e-8);
  (void)mu;
}

TEST_CASE("exponent and density are continuous across the piece boundaries") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto d = build_density(p, arr, DensityVariant::StateDependent);
  for (std::size_t i = 0; i + 1 < d.grid.size(); ++i) {
    const double dx = d.grid[i + 1] - d.grid[i];
    CHECK(std::abs(d.log_unnormalized[i + 1] - d.log_unnormalized[i]) < 50.0 * dx + 1e-9);
  }
}

TEST_CASE("halving the grid spacing leaves metrics unchanged to 1e-6") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  for (auto variant : {DensityVariant::StateDependent, DensityVariant::ConstantCoeff}) {
    GridSpec coarse, fine;
    fine.spacing = coarse.spacing / 2.0;
    const auto m1 = approx_metrics(build_density(p, arr, variant, coarse), p);
    const auto m2 = approx_metrics(build_density(p, arr, variant, fine), p);
    CHECK_ABS(m1.queue_len, m2.queue_len, 1e-6);
    CHECK_ABS(m1.adj_queue_len, m2.adj_queue_len, 1e-6);
    CHECK_ABS(m1.busy, m2.busy, 1e-6);
    CHECK_ABS(m1.idle_prob, m2.idle_prob, 1e-6);
  }
}

TEST_CASE("constant-coefficient metrics ignore the service rate, state-dependent ones do not") {
  const double r = 16.2;
  const auto p_fast = QueueParams::make(18, r * 0.5, 0.5);
  const auto p_slow = QueueParams::make(18, r * 0.1, 0.1);
  const auto arr_fast = ArrivalModel::poisson(p_fast.arrival_rate);
  const auto arr_slow = ArrivalModel::poisson(p_slow.arrival_rate);

  const auto cc_fast = approx_metrics(build_density(p_fast, arr_fast, DensityVariant::ConstantCoeff), p_fast);
  const auto cc_slow = approx_metrics(build_density(p_slow, arr_slow, DensityVariant::ConstantCoeff), p_slow);
  CHECK_ABS(cc_fast.queue_len, cc_slow.queue_len, 1e-6);

  const auto sd_fast = approx_metrics(build_density(p_fast, arr_fast, DensityVariant::StateDependent), p_fast);
  const auto sd_slow = approx_metrics(build_density(p_slow, arr_slow, DensityVariant::StateDependent), p_slow);
  CHECK(std::abs(sd_fast.queue_len - sd_slow.queue_len) > 0.1);
}

TEST_CASE("a general arrival law matching the poisson moments gives the same density") {
  const auto p = ward18();
  const auto poi = ArrivalModel::poisson(p.arrival_rate);
  auto w = poi.pmf_window(1e-18);
  std::vector<double> pmf(w.first + w.p.size(), 0.0);
  for (std::size_t i = 0; i < w.p.size(); ++i) pmf[w.first + i] = w.p[i];
  double kept = 0;
  for (double v : pmf) kept += v;
  for (double& v : pmf) v /= kept;
  const auto gen = ArrivalModel::general(pmf);
  CHECK_ABS(gen.c_a(), 2.0, 1e-10);

  const auto dp = build_density(p, poi, DensityVariant::StateDependent);
  const auto dg = build_density(p, gen, DensityVariant::StateDependent);
  for (double x : {-3.0, -1.0, 0.0, 0.4, 1.0, 3.0})
    CHECK(dg.cdf_at(x) == doctest::Approx(dp.cdf_at(x)).epsilon(1e-9));
  const auto mp = approx_metrics(dp, p);
  const auto mg = approx_metrics(dg, p);
  CHECK(mg.queue_len == doctest::Approx(mp.queue_len).epsilon(1e-9));
}

TEST_CASE("approximate metrics reproduce the reference table entries") {
  {
    const auto p = QueueParams::make(504, 482.06 * 0.189, 0.189);
    const auto arr = ArrivalModel::poisson(p.arrival_rate);
    const auto m = approx_metrics(build_density(p, arr, DensityVariant::StateDependent), p);
    CHECK_ABS(m.queue_len, 4.78, 0.02);
  }
  {
    const auto p = ward18();
    const auto arr = ArrivalModel::poisson(p.arrival_rate);
    const auto m = approx_metrics(build_density(p, arr, DensityVariant::ConstantCoeff), p);
    CHECK_ABS(m.queue_len, 4.91, 0.02);
  }
  {
    const double mu = 1.0 / 5.3;
    const auto p = QueueParams::make(66, 66 * 0.92 * mu, mu);
    const auto arr = ArrivalModel::poisson(p.arrival_rate);
    const auto m = approx_metrics(build_density(p, arr, DensityVariant::StateDependent), p);
    CHECK_ABS(m.queue_len, 4.19, 0.02);
  }
}

TEST_CASE("distance report carries per-metric errors and a dominating wasserstein") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto pmf = solve_auto(p, arr);
  for (auto variant : {DensityVariant::StateDependent, DensityVariant::ConstantCoeff}) {
    const auto d = build_density(p, arr, variant);
    const auto rep = distance_report(pmf, d, p);
    CHECK(rep.wasserstein > 0);
    CHECK(rep.wasserstein < 1.0);
    // d_W dominates every Lip(1) single-functional error
    CHECK(rep.queue_len.scaled <= rep.wasserstein + 1e-6);
    CHECK(rep.adj_queue_len.scaled <= rep.wasserstein + 1e-6);
    CHECK(rep.busy.scaled <= rep.wasserstein + 1e-6);
    REQUIRE(rep.queue_len.relative.has_value());
    CHECK(*rep.queue_len.relative ==
          doctest::Approx(std::abs(rep.exact.queue_len - rep.approx.queue_len) /
                          rep.exact.queue_len));
  }
}

TEST_CASE("relative error on a vanishing exact metric is reported as absent") {
  const auto p = ward18();
  StationaryPMF point;
  point.probs.assign(40, 0.0);
  point.probs[0] = 1.0;
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto d = build_density(p, arr, DensityVariant::StateDependent);
  const auto rep = distance_report(point, d, p);
  CHECK(!rep.queue_len.relative.has_value());
  CHECK(rep.queue_len.scaled > 0);
}

TEST_CASE("state-dependent density requires an overdispersion above one") {
  const auto p = QueueParams::make(4, 1.0, 0.5);
  // deterministic arrivals: c_A = 1 exactly
  std::vector<double> pmf = {0, 1.0};
  const auto arr = ArrivalModel::general(pmf);
  CHECK_THROWS_AS(build_density(p, arr, DensityVariant::StateDependent),
                  std::invalid_argument);
}

TEST_CASE("reference relative errors for the ward row") {
  const auto p = ward18();
  const auto arr = ArrivalModel::poisson(p.arrival_rate);
  const auto pmf = solve_auto(p, arr);
  const auto rep =
      distance_report(pmf, build_density(p, arr, DensityVariant::StateDependent), p);
  CHECK_ABS(rep.exact.queue_len, 4.65, 0.02);
  CHECK_ABS(rep.approx.queue_len, 4.62, 0.02);
  REQUIRE(rep.queue_len.relative.has_value());
  CHECK_ABS(100.0 * *rep.queue_len.relative, 0.67, 0.2);
}

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "geoq/markov.hpp"
#include "geoq/model.hpp"

namespace geoq {

enum class DensityVariant { StateDependent, ConstantCoeff };

struct GridSpec {
  double spacing = 1e-3;    // target node spacing
  double tail_nats = 40.0;  // tails cut where log p drops this far below the mode
};

/// Normalized stationary density of the approximating diffusion on a finite
/// quadrature grid. Nodes are piecewise uniform with the piece boundaries
/// -sqrt(R), 0 and -zeta forced onto the grid; each interval also carries its
/// midpoint value so composite Simpson quadrature is exact to O(h^4).
/// Immutable once built.
struct DiffusionDensity {
  DensityVariant variant = DensityVariant::StateDependent;
  std::vector<double> grid;              // strictly increasing abscissae
  std::vector<double> log_unnormalized;  // log((1/a) exp(Phi)) at nodes, Phi(0) = 0
  std::vector<double> mid_log_unnormalized;  // at interval midpoints
  double kappa = 0;                          // p(x) = kappa * exp(log_unnormalized)
  std::vector<double> cdf;                   // at nodes; cdf.back() == 1

  double pdf(std::size_t i) const;
  double pdf_mid(std::size_t i) const;  // interval i midpoint
  /// Linear interpolation between nodes, clamped to [0,1] outside the grid.
  double cdf_at(double x) const;
};

/// Builds the density p(x) = (kappa/a(x)) exp(int_0^x 2b/a dy) for the chosen
/// variant (ConstantCoeff takes a constant 2 mu with the same drift). The
/// exponent is accumulated per interval with Simpson steps; tails are located
/// on a coarse probe pass first.
DiffusionDensity build_density(const QueueParams& params, const ArrivalModel& arrivals,
                               DensityVariant variant, const GridSpec& resolution = {});

/// Metrics of the approximating diffusion, unscaled back to customer counts:
/// E(X-N)+ ~ sqrt(R) E(Y+zeta)+, E(X-R)+ ~ sqrt(R) E(Y)+,
/// E(X^N) ~ sqrt(R) E[delta N - (Y+zeta)-], P(X<=N) ~ F(-zeta).
MetricsValues approx_metrics(const DiffusionDensity& density, const QueueParams& params);

struct MetricError {
  double scaled = 0;                // |exact - approx| / sqrt(R)
  std::optional<double> relative;   // |exact - approx| / exact; absent when exact = 0
};

struct DistanceReport {
  MetricsValues exact;
  MetricsValues approx;
  MetricError queue_len, adj_queue_len, busy, idle_prob;
  double wasserstein = 0;  // int |F_exact - F_approx| dt on the scaled axis
};

/// Compares the solved pi (mapped to x = delta(n - R)) against the density.
DistanceReport distance_report(const StationaryPMF& pmf, const DiffusionDensity& density,
                               const QueueParams& params);

}  // namespace geoq

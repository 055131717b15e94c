#include "geoq/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geoq {
namespace {

double coeff_a(double x, const QueueParams& params, const ArrivalModel& arrivals,
               DensityVariant variant) {
  if (variant == DensityVariant::ConstantCoeff) return 2.0 * params.service_prob;
  return diffusion_a(x, params, arrivals);
}

// Raw (unnormalized) density data on a fixed domain.
struct RawDensity {
  std::vector<double> grid;
  std::vector<double> logp;      // Phi - log a, Phi(0) = 0
  std::vector<double> mid_logp;  // per interval
};

RawDensity build_raw(const QueueParams& params, const ArrivalModel& arrivals,
                     DensityVariant variant, double lo, double hi, double spacing) {
  auto g = [&](double y) {
    return 2.0 * drift_b(y, params) / coeff_a(y, params, arrivals, variant);
  };

  // Piece boundaries of b and a forced onto the grid; 0 anchors the exponent.
  std::vector<double> cuts = {lo, hi};
  for (double b : {-1.0 / params.delta, 0.0, -params.zeta})
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  RawDensity raw;
  raw.grid.push_back(cuts.front());
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double u = cuts[c], v = cuts[c + 1];
    const int n = std::max(2, static_cast<int>(std::ceil((v - u) / spacing)));
    for (int i = 1; i <= n; ++i) raw.grid.push_back(u + (v - u) * i / n);
  }

  const std::size_t m = raw.grid.size();
  std::vector<double> phi(m), mid_phi(m - 1);
  phi[0] = 0;
  double g_left = g(raw.grid[0]);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double x0 = raw.grid[i], x1 = raw.grid[i + 1];
    const double w = x1 - x0, xm = 0.5 * (x0 + x1);
    const double gm = g(xm), g_right = g(x1);
    // Two Simpson half-steps give Phi at the midpoint and the right node.
    mid_phi[i] = phi[i] + (w / 12.0) * (g_left + 4.0 * g(x0 + 0.25 * w) + gm);
    phi[i + 1] = mid_phi[i] + (w / 12.0) * (gm + 4.0 * g(x0 + 0.75 * w) + g_right);
    g_left = g_right;
  }

  // Re-anchor Phi(0) = 0 (0 is a forced node when it is interior).
  auto it = std::lower_bound(raw.grid.begin(), raw.grid.end(), 0.0);
  if (it != raw.grid.end() && std::abs(*it) < 1e-12) {
    const double shift = phi[it - raw.grid.begin()];
    for (double& v : phi) v -= shift;
    for (double& v : mid_phi) v -= shift;
  }

  raw.logp.resize(m);
  raw.mid_logp.resize(m - 1);
  for (std::size_t i = 0; i < m; ++i)
    raw.logp[i] = phi[i] - std::log(coeff_a(raw.grid[i], params, arrivals, variant));
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double xm = 0.5 * (raw.grid[i] + raw.grid[i + 1]);
    raw.mid_logp[i] = mid_phi[i] - std::log(coeff_a(xm, params, arrivals, variant));
  }
  return raw;
}

// Locates the abscissa where logp crosses (max - nats), scanning outward from
// the mode; returns the domain end if the cut is never reached.
double find_cut(const RawDensity& raw, double cut_level, bool left) {
  const std::size_t m = raw.grid.size();
  if (left) {
    for (std::size_t i = 0; i < m; ++i)
      if (raw.logp[i] >= cut_level) {
        if (i == 0) return raw.grid.front();
        const double t = (cut_level - raw.logp[i - 1]) / (raw.logp[i] - raw.logp[i - 1]);
        return raw.grid[i - 1] + t * (raw.grid[i] - raw.grid[i - 1]);
      }
    return raw.grid.front();
  }
  for (std::size_t i = m; i-- > 0;)
    if (raw.logp[i] >= cut_level) {
      if (i + 1 == m) return raw.grid.back();
      const double t = (cut_level - raw.logp[i + 1]) / (raw.logp[i] - raw.logp[i + 1]);
      return raw.grid[i + 1] + t * (raw.grid[i] - raw.grid[i + 1]);
    }
  return raw.grid.back();
}

}  // namespace

double DiffusionDensity::pdf(std::size_t i) const {
  return kappa * std::exp(log_unnormalized[i]);
}

double DiffusionDensity::pdf_mid(std::size_t i) const {
  return kappa * std::exp(mid_log_unnormalized[i]);
}

double DiffusionDensity::cdf_at(double x) const {
  if (x <= grid.front()) return 0.0;
  if (x >= grid.back()) return 1.0;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t i = (it - grid.begin()) - 1;
  const double t = (x - grid[i]) / (grid[i + 1] - grid[i]);
  return cdf[i] + t * (cdf[i + 1] - cdf[i]);
}

DiffusionDensity build_density(const QueueParams& params, const ArrivalModel& arrivals,
                               DensityVariant variant, const GridSpec& resolution) {
  if (!(resolution.spacing > 0 && resolution.spacing <= 0.1))
    throw std::invalid_argument("grid spacing must lie in (0, 0.1]");
  if (variant == DensityVariant::StateDependent && arrivals.c_a() <= 1.0)
    throw std::invalid_argument("state-dependent density requires c_A > 1");

  // Probe on a coarse grid to locate the 40-nat tail cuts, extending the
  // domain until both tails are reached.
  const double zeta = params.zeta;
  const double a_plateau = coeff_a(-zeta + 1.0, params, arrivals, variant);
  const double right_slope = 2.0 * params.service_prob * std::abs(zeta) / a_plateau;
  double lo = -12.0;
  double hi = -zeta + (resolution.tail_nats + 5.0) / right_slope;
  double cut_lo = 0, cut_hi = 0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 24) throw std::runtime_error("density tail location did not converge");
    RawDensity probe = build_raw(params, arrivals, variant, lo, hi,
                                 std::max(resolution.spacing, 1e-2));
    const double peak = *std::max_element(probe.logp.begin(), probe.logp.end());
    const double cut = peak - resolution.tail_nats;
    const bool left_ok = probe.logp.front() <= cut;
    const bool right_ok = probe.logp.back() <= cut;
    if (left_ok && right_ok) {
      cut_lo = find_cut(probe, cut, true);
      cut_hi = find_cut(probe, cut, false);
      break;
    }
    if (!left_ok) lo -= 0.5 * (hi - lo);
    if (!right_ok) hi += 0.5 * (hi - lo);
  }

  RawDensity raw = build_raw(params, arrivals, variant, cut_lo, cut_hi, resolution.spacing);

  DiffusionDensity d;
  d.variant = variant;
  d.grid = std::move(raw.grid);
  d.log_unnormalized = std::move(raw.logp);
  d.mid_log_unnormalized = std::move(raw.mid_logp);

  const double peak =
      *std::max_element(d.log_unnormalized.begin(), d.log_unnormalized.end());
  const std::size_t m = d.grid.size();
  d.cdf.assign(m, 0.0);
  double total = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double w = d.grid[i + 1] - d.grid[i];
    total += (w / 6.0) * (std::exp(d.log_unnormalized[i] - peak) +
                          4.0 * std::exp(d.mid_log_unnormalized[i] - peak) +
                          std::exp(d.log_unnormalized[i + 1] - peak));
    d.cdf[i + 1] = total;
  }
  if (!(total > 0) || !std::isfinite(total))
    throw std::runtime_error("density normalization failed (grid too coarse)");
  d.kappa = std::exp(-peak) / total;
  for (double& v : d.cdf) v /= total;
  d.cdf.back() = 1.0;
  return d;
}

MetricsValues approx_metrics(const DiffusionDensity& density, const QueueParams& params) {
  const double zeta = params.zeta;
  const double sqrt_r = 1.0 / params.delta;
  const double dn = params.delta * params.n_servers;
  auto h_queue = [&](double x) { return std::max(x + zeta, 0.0); };
  auto h_adj = [&](double x) { return std::max(x, 0.0); };
  auto h_busy = [&](double x) { return dn - std::max(-(x + zeta), 0.0); };

  double q = 0, adj = 0, busy = 0;
  const auto& grid = density.grid;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double w = grid[i + 1] - grid[i];
    const double xm = 0.5 * (grid[i] + grid[i + 1]);
    const double p0 = density.pdf(i), pm = density.pdf_mid(i), p1 = density.pdf(i + 1);
    q += (w / 6.0) * (h_queue(grid[i]) * p0 + 4.0 * h_queue(xm) * pm + h_queue(grid[i + 1]) * p1);
    adj += (w / 6.0) * (h_adj(grid[i]) * p0 + 4.0 * h_adj(xm) * pm + h_adj(grid[i + 1]) * p1);
    busy += (w / 6.0) * (h_busy(grid[i]) * p0 + 4.0 * h_busy(xm) * pm + h_busy(grid[i + 1]) * p1);
  }

  MetricsValues m;
  m.queue_len = sqrt_r * q;
  m.adj_queue_len = sqrt_r * adj;
  m.busy = sqrt_r * busy;
  m.idle_prob = density.cdf_at(-zeta);
  return m;
}

DistanceReport distance_report(const StationaryPMF& pmf, const DiffusionDensity& density,
                               const QueueParams& params) {
  DistanceReport rep;
  rep.exact = exact_metrics(pmf, params);
  rep.approx = approx_metrics(density, params);

  const double sqrt_r = 1.0 / params.delta;
  auto fill = [&](MetricError& e, double exact, double approx) {
    const double diff = std::abs(exact - approx);
    e.scaled = diff / sqrt_r;
    if (exact != 0.0) e.relative = diff / std::abs(exact);
  };
  fill(rep.queue_len, rep.exact.queue_len, rep.approx.queue_len);
  fill(rep.adj_queue_len, rep.exact.adj_queue_len, rep.approx.adj_queue_len);
  fill(rep.busy, rep.exact.busy, rep.approx.busy);
  fill(rep.idle_prob, rep.exact.idle_prob, rep.approx.idle_prob);

  // d_W = int |F_exact - F_approx| dt over the union of supports. The lattice
  // of the scaled chain is uniform with pitch delta, so F_exact is a step
  // function with jumps at x_n = delta(n - R); between consecutive
  // breakpoints the difference is linear in t.
  const double delta = params.delta;
  const double r = params.offered_load;
  const std::size_t states = pmf.probs.size();
  std::vector<double> cum(states);
  double acc = 0;
  for (std::size_t n = 0; n < states; ++n) {
    acc += pmf.probs[n];
    cum[n] = acc;
  }
  auto f_exact = [&](double t) {
    // Largest n with delta(n - r) <= t.
    const double idx = std::floor(t / delta + r + 1e-9);
    if (idx < 0) return 0.0;
    const std::size_t n = static_cast<std::size_t>(idx);
    return n >= states ? 1.0 : cum[n];
  };

  std::vector<double> pts;
  pts.reserve(states + density.grid.size());
  for (std::size_t n = 0; n < states; ++n) pts.push_back(delta * (static_cast<double>(n) - r));
  pts.insert(pts.end(), density.grid.begin(), density.grid.end());
  std::sort(pts.begin(), pts.end());

  double dist = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double t0 = pts[i], t1 = pts[i + 1];
    const double w = t1 - t0;
    if (w < 1e-14) continue;
    const double c = f_exact(0.5 * (t0 + t1));  // constant on the open interval
    const double d0 = c - density.cdf_at(t0);
    const double d1 = c - density.cdf_at(t1);
    if (d0 * d1 >= 0) {
      dist += 0.5 * w * (std::abs(d0) + std::abs(d1));
    } else {
      dist += 0.5 * w * (d0 * d0 + d1 * d1) / std::abs(d1 - d0);
    }
  }
  rep.wasserstein = dist;
  return rep;
}

}  // namespace geoq

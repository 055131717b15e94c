#include "geoq/markov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace geoq {
namespace {

constexpr double kEntryDrop = 1e-16;   // per-row entries below this are folded
constexpr double kWindowDrop = 1e-18;  // component pmf windows keep entries above this

// Binomial(M, r) pmf over a window around the mean, entries below `drop`
// trimmed.
struct BinWindow {
  int first = 0;
  std::vector<double> p;
};

BinWindow binomial_window(int m, double r, double drop) {
  BinWindow w;
  if (m == 0) {
    w.first = 0;
    w.p = {1.0};
    return w;
  }
  const double lr = std::log(r), lq = std::log1p(-r);
  const int mode = std::clamp(static_cast<int>(std::floor((m + 1) * r)), 0, m);
  auto logpmf = [&](int k) {
    return std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) + k * lr +
           (m - k) * lq;
  };
  std::vector<double> down, up;
  double lp = logpmf(mode);
  for (int k = mode; k >= 0; --k) {
    double v = std::exp(lp);
    if (v < drop && k < mode) break;
    down.push_back(v);
    // p(k-1)/p(k) = k (1-r) / ((m-k+1) r)
    lp += std::log((double)k) + lq - std::log((double)(m - k + 1)) - lr;
  }
  lp = logpmf(mode);
  for (int k = mode + 1; k <= m; ++k) {
    lp += std::log((double)(m - k + 1)) + lr - std::log((double)k) - lq;
    double v = std::exp(lp);
    if (v < drop) break;
    up.push_back(v);
  }
  w.first = mode - static_cast<int>(down.size()) + 1;
  w.p.assign(down.rbegin(), down.rend());
  w.p.insert(w.p.end(), up.begin(), up.end());
  return w;
}

double binomial_raw_moment(int k, double m, double r) {
  const double mr = m * r;
  switch (k) {
    case 0: return 1.0;
    case 1: return mr;
    case 2: return mr * (1 - r + mr);
    case 3: return mr * (1 - 3 * r + 3 * mr + 2 * r * r - 3 * mr * r + mr * mr);
    case 4:
      return mr * (1 - 7 * r + 7 * mr + 12 * r * r - 18 * mr * r + 6 * mr * mr - 6 * r * r * r +
                   11 * mr * r * r - 6 * mr * mr * r + mr * mr * mr);
    default: throw std::invalid_argument("binomial_raw_moment supports k in 0..4");
  }
}

double binom_coeff_small(int n, int k) {
  double c = 1;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

}  // namespace

TransitionKernel::Row TransitionKernel::convolve(const std::vector<double>& dep, int dep_first,
                                                 const ArrivalModel::Window& arr, int /*n*/,
                                                 TruncationPolicy policy, double* fold_mass) {
  // Support of m - n = a - d: [arr.first - dep_last, arr.last - dep_first].
  const int dep_last = dep_first + static_cast<int>(dep.size()) - 1;
  const int lo = arr.first - dep_last;
  const int hi = arr.first + static_cast<int>(arr.p.size()) - 1 - dep_first;
  Row row;
  row.first = lo;
  row.p.assign(hi - lo + 1, 0.0);
  for (std::size_t di = 0; di < dep.size(); ++di) {
    const double pd = dep[di];
    const int base = arr.first - (dep_first + static_cast<int>(di)) - lo;
    for (std::size_t ai = 0; ai < arr.p.size(); ++ai)
      row.p[base + ai] += pd * arr.p[ai];
  }
  // Fold sub-threshold entries and window losses back into the row.
  double sum = 0;
  std::size_t modal = 0;
  for (std::size_t i = 0; i < row.p.size(); ++i) {
    if (row.p[i] < kEntryDrop) row.p[i] = 0.0;
    sum += row.p[i];
    if (row.p[i] > row.p[modal]) modal = i;
  }
  const double missing = 1.0 - sum;
  if (fold_mass) *fold_mass = std::abs(missing);
  if (policy == TruncationPolicy::LumpTop) {
    row.p[modal] += missing;
  } else {
    // Renormalize and Discard both keep the convolution window stochastic;
    // Discard drops mass only at the state-space boundary (see accumulate).
    const double scale = 1.0 / sum;
    for (double& v : row.p) v *= scale;
  }
  // Trim leading/trailing zeros.
  std::size_t b = 0, e = row.p.size();
  while (b < e && row.p[b] == 0.0) ++b;
  while (e > b && row.p[e - 1] == 0.0) --e;
  row.first += static_cast<int>(b);
  row.p = std::vector<double>(row.p.begin() + b, row.p.begin() + e);
  return row;
}

TransitionKernel::TransitionKernel(const QueueParams& params, const ArrivalModel& arrivals,
                                   int truncation, TruncationPolicy policy)
    : params_(params), truncation_(truncation), policy_(policy) {
  arrivals.require_paired(params);
  const int n_built = std::min(params.n_servers, truncation_);
  const auto arr = arrivals.pmf_window(kWindowDrop);
  rows_.reserve(n_built + 1);
  double worst = 0;
  for (int n = 0; n <= n_built; ++n) {
    auto dep = binomial_window(n, params.service_prob, kWindowDrop);
    double fold = 0;
    rows_.push_back(convolve(dep.p, dep.first, arr, n, policy, &fold));
    worst = std::max(worst, fold);
  }
  shared_from_ = n_built + 1;
  if (shared_from_ <= truncation_) {
    auto dep = binomial_window(params.n_servers, params.service_prob, kWindowDrop);
    double fold = 0;
    tail_row_ = convolve(dep.p, dep.first, arr, params.n_servers, policy, &fold);
    worst = std::max(worst, fold);
  }
  tail_bound_ = worst;
}

void TransitionKernel::accumulate(const Row& row, int n, double weight,
                                  std::vector<double>& out) const {
  const int k = truncation_;
  int idx = n + row.first;
  if (policy_ == TruncationPolicy::Discard) {
    for (double v : row.p) {
      if (idx >= 0 && idx <= k) out[idx] += weight * v;
      ++idx;
    }
    return;
  }
  for (double v : row.p) {
    out[std::clamp(idx, 0, k)] += weight * v;
    ++idx;
  }
}

void TransitionKernel::apply(std::span<const double> pi, std::vector<double>& out) const {
  out.assign(truncation_ + 1, 0.0);
  const int n_built = static_cast<int>(rows_.size()) - 1;
  for (int n = 0; n <= n_built; ++n)
    if (pi[n] != 0.0) accumulate(rows_[n], n, pi[n], out);
  for (int n = shared_from_; n <= truncation_; ++n)
    if (pi[n] != 0.0) accumulate(tail_row_, n, pi[n], out);
}

std::vector<double> TransitionKernel::dense_row(int n) const {
  std::vector<double> out(truncation_ + 1, 0.0);
  if (n < static_cast<int>(rows_.size()))
    accumulate(rows_[n], n, 1.0, out);
  else
    accumulate(tail_row_, n, 1.0, out);
  return out;
}

int default_truncation(const QueueParams& params) {
  const double sqrt_r = std::sqrt(params.offered_load);
  const double span = std::max(10.0 * sqrt_r, 20.0 / std::abs(params.zeta) * sqrt_r);
  return params.n_servers + static_cast<int>(std::ceil(span));
}

TransitionKernel build_kernel(const QueueParams& params, const ArrivalModel& arrivals, int K,
                              TruncationPolicy policy) {
  if (K <= params.n_servers) {
    std::ostringstream os;
    os << "truncation K = " << K << " must exceed N = " << params.n_servers;
    throw std::invalid_argument(os.str());
  }
  // The arrival window beyond K - N must carry less than 1e-14 mass.
  const auto w = arrivals.pmf_window(kWindowDrop);
  const int arr_reach = w.first + static_cast<int>(w.p.size());
  if (K < params.n_servers + arr_reach) K = params.n_servers + arr_reach;
  return TransitionKernel(params, arrivals, K, policy);
}

namespace {

std::vector<double> erlang_c_profile(const QueueParams& params, int K) {
  // pi_n proportional to R^n/n! up to N, geometric ratio R/N above; computed
  // in log space.
  const double r = params.offered_load;
  const int n_srv = params.n_servers;
  std::vector<double> logw(K + 1);
  logw[0] = 0;
  for (int n = 1; n <= K; ++n) {
    const double ratio = (n <= n_srv) ? r / n : r / n_srv;
    logw[n] = logw[n - 1] + std::log(ratio);
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(K + 1);
  double sum = 0;
  for (int n = 0; n <= K; ++n) {
    w[n] = std::exp(logw[n] - mx);
    sum += w[n];
  }
  for (double& v : w) v /= sum;
  return w;
}

void normalize(std::vector<double>& v) {
  double sum = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= sum;
}

}  // namespace

StationaryPMF solve_stationary(const TransitionKernel& kernel, double tol, long max_iters,
                               const std::vector<double>* init) {
  const int K = kernel.truncation();
  std::vector<double> pi;
  if (init) {
    pi.assign(K + 1, 0.0);
    const std::size_t n = std::min<std::size_t>(init->size(), pi.size());
    std::copy(init->begin(), init->begin() + n, pi.begin());
    normalize(pi);
  } else {
    pi = erlang_c_profile(kernel.params(), K);
  }
  std::vector<double> next;
  double residual = 0;
  const bool substochastic = kernel.policy() == TruncationPolicy::Discard;
  for (long it = 1; it <= max_iters; ++it) {
    kernel.apply(pi, next);
    if (substochastic) normalize(next);  // compare Perron directions, not raw mass
    residual = 0;
    for (int n = 0; n <= K; ++n) residual = std::max(residual, std::abs(next[n] - pi[n]));
    pi.swap(next);
    normalize(pi);
    if (residual <= tol) {
      StationaryPMF out;
      out.probs = std::move(pi);
      out.residual = residual;
      out.truncation_mass = out.probs.back();
      out.tolerance = tol;
      out.iterations = it;
      return out;
    }
  }
  std::ostringstream os;
  os << "stationary solve did not converge in " << max_iters
     << " iterations; last residual = " << residual;
  throw std::runtime_error(os.str());
}

StationaryPMF solve_stationary_dense(const TransitionKernel& kernel) {
  const int K = kernel.truncation();
  if (K + 1 > 2000)
    throw std::invalid_argument("dense oracle solve limited to K < 2000");
  if (kernel.policy() == TruncationPolicy::Discard)
    throw std::invalid_argument("dense oracle solve requires a stochastic kernel");
  const int n = K + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);  // m = P^T - I
  for (int row = 0; row < n; ++row) {
    auto r = kernel.dense_row(row);
    for (int col = 0; col < n; ++col) m(col, row) += r[col];
  }
  m -= Eigen::MatrixXd::Identity(n, n);
  m.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = m.partialPivLu().solve(rhs);

  StationaryPMF out;
  out.probs.assign(pi.data(), pi.data() + n);
  normalize(out.probs);
  std::vector<double> check;
  kernel.apply(out.probs, check);
  double residual = 0;
  for (int i = 0; i < n; ++i) residual = std::max(residual, std::abs(check[i] - out.probs[i]));
  out.residual = residual;
  out.truncation_mass = out.probs.back();
  out.tolerance = 0;
  out.iterations = 0;
  return out;
}

StationaryPMF solve_auto(const QueueParams& params, const ArrivalModel& arrivals, double tol) {
  int K = default_truncation(params);
  std::vector<double> prev;
  for (int attempt = 0; attempt < 12; ++attempt) {
    auto kernel = build_kernel(params, arrivals, K);
    auto pmf = solve_stationary(kernel, tol, 2000000, prev.empty() ? nullptr : &prev);
    if (pmf.truncation_mass < 1e-12) return pmf;
    prev = pmf.probs;
    K = K + (K - params.n_servers) / 2 + 1;  // grow the queue span geometrically
  }
  throw std::runtime_error("truncation level did not stabilize (pi(K) >= 1e-12)");
}

MetricsValues exact_metrics(const StationaryPMF& pmf, const QueueParams& params) {
  const int n_srv = params.n_servers;
  const double r = params.offered_load;
  MetricsValues m;
  for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
    const double p = pmf.probs[n];
    const double nn = static_cast<double>(n);
    if (nn > n_srv) m.queue_len += (nn - n_srv) * p;
    if (nn > r) m.adj_queue_len += (nn - r) * p;
    m.busy += std::min(nn, static_cast<double>(n_srv)) * p;
    if (nn <= n_srv) m.idle_prob += p;
  }
  return m;
}

double check_bar(const StationaryPMF& pmf, const QueueParams& params,
                 const ArrivalModel& arrivals, std::span<const double> poly) {
  if (poly.size() > 5) throw std::invalid_argument("check_bar supports polynomial degree <= 4");
  const int deg = static_cast<int>(poly.size()) - 1;
  const double delta = params.delta;
  const double mu = params.service_prob;
  const int n_srv = params.n_servers;

  double ea[5];
  for (int k = 0; k <= 4; ++k) ea[k] = arrivals.raw_moment(k);

  double acc = 0;
  for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
    const double p = pmf.probs[n];
    if (p == 0.0) continue;
    const double m = std::min<double>(static_cast<double>(n), n_srv);
    double ed[5];
    for (int k = 0; k <= 4; ++k) ed[k] = binomial_raw_moment(k, m, mu);
    // Raw moments of W = A - D (independent).
    double ew[5];
    for (int j = 1; j <= deg; ++j) {
      double s = 0;
      for (int i = 0; i <= j; ++i) {
        const double sign = ((j - i) % 2 == 0) ? 1.0 : -1.0;
        s += binom_coeff_small(j, i) * sign * ea[i] * ed[j - i];
      }
      ew[j] = s;
    }
    const double x = delta * (static_cast<double>(n) - params.offered_load);
    // G f(x) = sum_j delta^j E[W^j] * f^(j)(x)/j! with f^(j)(x)/j! expanded
    // from the coefficients.
    double g = 0, dj = 1;
    for (int j = 1; j <= deg; ++j) {
      dj *= delta;
      double coef = 0, xp = 1;
      for (int k = j; k <= deg; ++k) {
        coef += poly[k] * binom_coeff_small(k, j) * xp;
        xp *= x;
      }
      g += dj * ew[j] * coef;
    }
    acc += p * g;
  }
  return std::abs(acc);
}

std::vector<BoundCheck> verify_bounds(const StationaryPMF& pmf, const QueueParams& params) {
  const double delta = params.delta;
  const double mu = params.service_prob;
  const double zeta = params.zeta;
  const double abs_zeta = std::abs(zeta);
  const int n_srv = params.n_servers;
  const double r = params.offered_load;

  double idle = 0, x2_below = 0, absx_below = 0, absx_above = 0, shifted_below = 0;
  for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
    const double p = pmf.probs[n];
    const double x = delta * (static_cast<double>(n) - r);
    if (static_cast<int>(n) <= n_srv) {
      idle += p;
      x2_below += x * x * p;
      absx_below += std::abs(x) * p;
      shifted_below += std::abs(x + zeta) * p;
    }
    if (static_cast<int>(n) >= n_srv) absx_above += std::abs(x) * p;
  }

  const double d2 = delta * delta;
  std::vector<BoundCheck> checks;
  auto push = [&](std::string name, double lhs, double rhs, bool equality) {
    BoundCheck c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.equality = equality;
    c.pass = equality ? std::abs(lhs - rhs) < 1e-6 : lhs <= rhs + 1e-12;
    checks.push_back(std::move(c));
  };

  push("idle_probability", idle,
       (2.0 + delta) * (abs_zeta + mu * std::sqrt(r)) / (1.0 - mu), false);
  push("second_moment_below", x2_below, 4.0 / 3.0 + 8.0 / 3.0 * d2, false);
  push("abs_moment_below", absx_below,
       std::min(std::sqrt(4.0 / 3.0 + 8.0 / 3.0 * d2), 2.0 * abs_zeta), false);
  push("abs_moment_above", absx_above, (d2 + 1.0) / abs_zeta + delta, false);
  push("shifted_mean_identity", shifted_below, abs_zeta, true);
  return checks;
}

}  // namespace geoq

#pragma once

#include <span>
#include <string>
#include <vector>

#include "geoq/model.hpp"

namespace geoq {

enum class TruncationPolicy { LumpTop, Renormalize, Discard };

/// One-step transition kernel of the customer-count DTMC, truncated to
/// states 0..K. Row n mixes departures D ~ Binomial(min(n,N), mu) with the
/// arrival law: P(n -> m) = sum_d P(D = d) P(A = m - n + d). Rows for
/// n > N share one convolution (the departure law no longer depends on n).
/// Under LumpTop and Renormalize, mass that would land above K is folded
/// back so every row is exactly stochastic. Under Discard that mass is
/// dropped, making the kernel substochastic; the stationary solve then
/// yields the Perron (quasi-stationary) vector of the capped chain.
class TransitionKernel {
 public:
  TransitionKernel(const QueueParams& params, const ArrivalModel& arrivals, int truncation,
                   TruncationPolicy policy);

  int size() const { return truncation_ + 1; }  // states 0..K
  int truncation() const { return truncation_; }
  TruncationPolicy policy() const { return policy_; }
  /// Largest per-row mass folded by entry dropping (certificate).
  double tail_bound() const { return tail_bound_; }
  const QueueParams& params() const { return params_; }

  /// out = pi P (out resized to size()).
  void apply(std::span<const double> pi, std::vector<double>& out) const;

  /// Dense copy of row n with the boundary policy applied (sums to 1
  /// except under Discard).
  std::vector<double> dense_row(int n) const;

 private:
  struct Row {
    int first = 0;           // state index of p[0] before clamping
    std::vector<double> p;
  };

  void accumulate(const Row& row, int n, double weight, std::vector<double>& out) const;
  static Row convolve(const std::vector<double>& dep, int dep_first,
                      const ArrivalModel::Window& arr, int n, TruncationPolicy policy,
                      double* fold_mass);

  QueueParams params_;
  int truncation_ = 0;
  TruncationPolicy policy_ = TruncationPolicy::LumpTop;
  double tail_bound_ = 0;
  std::vector<Row> rows_;  // rows 0..min(N,K)
  Row tail_row_;           // shared shape for n > N, offsets relative to n
  int shared_from_ = 0;
};

/// Default truncation level: N + ceil(max(10 sqrt(R), (20/|zeta|) sqrt(R))).
int default_truncation(const QueueParams& params);

/// Builds the kernel; K must exceed N. K is raised automatically if the
/// arrival tail beyond K - N is heavier than 1e-14.
TransitionKernel build_kernel(const QueueParams& params, const ArrivalModel& arrivals, int K,
                              TruncationPolicy policy = TruncationPolicy::LumpTop);

/// Truncated stationary distribution with its convergence certificate.
struct StationaryPMF {
  std::vector<double> probs;   // states 0..K
  double residual = 0;         // max |pi P - pi| componentwise
  double truncation_mass = 0;  // pi(K)
  double tolerance = 0;
  long iterations = 0;
};

/// Power iteration on pi -> pi P until the residual drops below tol.
/// Deterministic given inputs. Throws std::runtime_error (carrying the last
/// residual) if max_iters is exhausted.
StationaryPMF solve_stationary(const TransitionKernel& kernel, double tol = 1e-12,
                               long max_iters = 2000000,
                               const std::vector<double>* init = nullptr);

/// Dense direct solve of pi P = pi, sum pi = 1 (oracle path; K <= 2000).
StationaryPMF solve_stationary_dense(const TransitionKernel& kernel);

/// Convenience: builds the kernel at the default truncation and grows K
/// geometrically until pi(K) < 1e-12.
StationaryPMF solve_auto(const QueueParams& params, const ArrivalModel& arrivals,
                         double tol = 1e-12);

/// The Lip(1) performance measures evaluated exactly over pi.
struct MetricsValues {
  double queue_len = 0;      // E(X - N)^+
  double adj_queue_len = 0;  // E(X - R)^+
  double busy = 0;           // E(X ^ N)
  double idle_prob = 0;      // P(X <= N)
};

MetricsValues exact_metrics(const StationaryPMF& pmf, const QueueParams& params);

/// |E[G f(X~)]| for a polynomial f (coefficients c0..c_deg, degree <= 4),
/// where G is the one-step generator of the scaled chain at x = delta(n - R).
/// A small value certifies the solved pi.
double check_bar(const StationaryPMF& pmf, const QueueParams& params,
                 const ArrivalModel& arrivals, std::span<const double> poly);

struct BoundCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool equality = false;  // pass means |lhs - rhs| small instead of lhs <= rhs
  bool pass = false;
};

/// Evaluates both sides of the idle-probability bound and the scaled-count
/// moment bounds from the solved pi.
std::vector<BoundCheck> verify_bounds(const StationaryPMF& pmf, const QueueParams& params);

}  // namespace geoq

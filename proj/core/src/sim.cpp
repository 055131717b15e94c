#include "geoq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace geoq {
namespace {

struct RepStats {
  std::vector<std::int64_t> counts;  // occupancy histogram
  MetricsValues means;               // time averages over sampled epochs
};

RepStats run_replication(const QueueParams& params, const ArrivalModel& arrivals,
                         long warmup, long samples, std::uint64_t seed, int rep) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(seed),
                   static_cast<std::uint32_t>(rep)};
  std::mt19937_64 rng(sq);

  std::poisson_distribution<int> poisson(arrivals.mean());
  std::discrete_distribution<int> general;
  if (arrivals.kind() == ArrivalKind::GeneralPmf)
    general = std::discrete_distribution<int>(arrivals.pmf().begin(), arrivals.pmf().end());
  auto draw_arrivals = [&]() {
    return arrivals.kind() == ArrivalKind::Poisson ? poisson(rng) : general(rng);
  };

  const int n_srv = params.n_servers;
  const double mu = params.service_prob;
  std::binomial_distribution<int> binom;
  using binom_param = std::binomial_distribution<int>::param_type;

  long x = std::lround(params.offered_load);
  for (long k = 0; k < warmup; ++k) {
    const int busy = static_cast<int>(std::min<long>(x, n_srv));
    x += draw_arrivals() - (busy > 0 ? binom(rng, binom_param(busy, mu)) : 0);
  }

  RepStats st;
  double q = 0, adj = 0, busy_sum = 0, idle = 0;
  const double r = params.offered_load;
  for (long k = 0; k < samples; ++k) {
    const int busy = static_cast<int>(std::min<long>(x, n_srv));
    x += draw_arrivals() - (busy > 0 ? binom(rng, binom_param(busy, mu)) : 0);
    if (x >= static_cast<long>(st.counts.size())) st.counts.resize(x + 1, 0);
    ++st.counts[x];
    if (x > n_srv) q += static_cast<double>(x - n_srv);
    if (x > r) adj += static_cast<double>(x) - r;
    busy_sum += std::min<long>(x, n_srv);
    if (x <= n_srv) idle += 1;
  }
  st.means.queue_len = q / samples;
  st.means.adj_queue_len = adj / samples;
  st.means.busy = busy_sum / samples;
  st.means.idle_prob = idle / samples;
  return st;
}

}  // namespace

SimResult simulate_census(const QueueParams& params, const ArrivalModel& arrivals,
                          const SimConfig& cfg) {
  arrivals.require_paired(params);
  if (cfg.sample_epochs < 1000)
    throw std::invalid_argument("sample_epochs must be >= 1000");
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");

  const long warmup = cfg.warmup_epochs >= 0
                          ? cfg.warmup_epochs
                          : static_cast<long>(std::ceil(50.0 / params.service_prob));
  const int reps = cfg.replications;
  std::vector<RepStats> stats(reps);

  const int workers = std::clamp(cfg.jobs, 1, reps);
  auto worker = [&](int tid) {
    for (int r = tid; r < reps; r += workers)
      stats[r] = run_replication(params, arrivals, warmup, cfg.sample_epochs, cfg.seed, r);
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  SimResult out;
  out.warmup_epochs = warmup;
  out.sample_epochs = cfg.sample_epochs;
  out.replications = reps;
  out.seed = cfg.seed;

  std::size_t top = 0;
  for (const auto& st : stats) top = std::max(top, st.counts.size());
  out.histogram.assign(top, 0.0);
  out.histogram_half_width.assign(top, 0.0);
  const double per_rep = static_cast<double>(cfg.sample_epochs);
  for (const auto& st : stats)
    for (std::size_t i = 0; i < st.counts.size(); ++i)
      out.histogram[i] += st.counts[i] / per_rep / reps;
  if (reps > 1) {
    for (std::size_t i = 0; i < top; ++i) {
      double var = 0;
      for (const auto& st : stats) {
        const double f = i < st.counts.size() ? st.counts[i] / per_rep : 0.0;
        const double d = f - out.histogram[i];
        var += d * d;
      }
      out.histogram_half_width[i] = 1.96 * std::sqrt(var / (reps - 1) / reps);
    }
  }

  auto summarize = [&](auto pick, double& mean, double& hw) {
    double m = 0;
    for (const auto& st : stats) m += pick(st.means);
    m /= reps;
    double var = 0;
    for (const auto& st : stats) {
      const double d = pick(st.means) - m;
      var += d * d;
    }
    mean = m;
    hw = reps > 1 ? 1.96 * std::sqrt(var / (reps - 1) / reps) : 0.0;
  };
  summarize([](const MetricsValues& v) { return v.queue_len; }, out.metrics.queue_len,
            out.half_width.queue_len);
  summarize([](const MetricsValues& v) { return v.adj_queue_len; }, out.metrics.adj_queue_len,
            out.half_width.adj_queue_len);
  summarize([](const MetricsValues& v) { return v.busy; }, out.metrics.busy,
            out.half_width.busy);
  summarize([](const MetricsValues& v) { return v.idle_prob; }, out.metrics.idle_prob,
            out.half_width.idle_prob);
  return out;
}

}  // namespace geoq

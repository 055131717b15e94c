#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoq/markov.hpp"
#include "geoq/model.hpp"

namespace geoq {

struct SimConfig {
  long warmup_epochs = -1;      // < 0 means the default ceil(50 / mu)
  long sample_epochs = 100000;  // per replication, >= 1000
  int replications = 10;
  std::uint64_t seed = 0;
  int jobs = 1;  // replications run on up to this many threads
};

struct SimResult {
  std::vector<double> histogram;  // time-average occupancy over all replications
  std::vector<double> histogram_half_width;  // per state, from replication variance
  MetricsValues metrics;          // means over replications
  MetricsValues half_width;       // 95% half-widths from replication variance
  long warmup_epochs = 0;         // resolved value
  long sample_epochs = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::string rng = "mt19937_64";  // stream r is seeded from {seed, r}
};

/// Monte Carlo estimate of the stationary census: each replication runs the
/// chain X' = X + A - D, D ~ Binomial(X ^ N, mu), discards the warmup, and
/// time-averages the rest. Deterministic given (params, arrivals, cfg).
SimResult simulate_census(const QueueParams& params, const ArrivalModel& arrivals,
                          const SimConfig& cfg);

}  // namespace geoq

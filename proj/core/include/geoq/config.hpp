#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "geoq/diffusion.hpp"
#include "geoq/markov.hpp"
#include "geoq/model.hpp"
#include "geoq/sim.hpp"

namespace geoq {

/// A scenario loaded from a JSON config file. Recognized fields:
///   n_servers, arrival_rate, service_prob  (required)
///   arrival_kind: "poisson" (default) | "general", pmf: [...] for general
///   regime, beta, gamma, s, multipliers    (optional sweep recipe)
struct ScenarioConfig {
  QueueParams params;
  ArrivalModel arrivals;
  std::optional<RegimeSpec> sweep;
};

/// Throws std::invalid_argument on malformed or inconsistent configs.
ScenarioConfig parse_scenario_config(const std::string& text);
ScenarioConfig load_scenario_config(const std::filesystem::path& file);

/// Two-column CSV (state, probability).
void write_pmf_csv(const StationaryPMF& pmf, const std::filesystem::path& file);
/// Sidecar JSON metadata (K, residual, tolerance, iterations).
void write_pmf_meta(const StationaryPMF& pmf, const std::filesystem::path& file);

/// Three-column CSV (x, p, F).
void write_density_csv(const DiffusionDensity& density, const std::filesystem::path& file);

/// Histogram CSV (state, probability, half_width) plus a JSON sidecar with
/// the RNG name and run settings.
void write_sim_csv(const SimResult& result, const std::filesystem::path& file);
void write_sim_meta(const SimResult& result, const std::filesystem::path& file);

}  // namespace geoq

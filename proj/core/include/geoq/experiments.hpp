#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoq/diffusion.hpp"
#include "geoq/markov.hpp"
#include "geoq/model.hpp"
#include "geoq/sim.hpp"

namespace geoq {

enum class VariantKind { Exact, StateDependent, ConstantCoeff, Sim };
enum class MetricKind { QueueLen, AdjQueueLen, Busy, IdleProb };

std::string variant_name(VariantKind v);
std::string metric_name(MetricKind m);
double metric_of(const MetricsValues& values, MetricKind m);

/// A sweep of scenarios evaluated under several variants, rendered like one
/// table row per scenario. Arrivals are Poisson(Lambda) per scenario.
struct TableSpec {
  std::string name;
  std::string title;
  std::vector<QueueParams> scenarios;
  std::vector<std::string> row_labels;  // aligned with scenarios
  std::vector<VariantKind> variants;    // nonempty; Exact required for error columns
  MetricKind focus = MetricKind::QueueLen;
  bool scaled_error = false;    // |exact - approx| / sqrt(R) on the focus metric
  bool relative_error = false;  // |exact - approx| / exact
  bool wasserstein = false;

  // Alternate parameterization for the Exact column, aligned with
  // scenarios. The reference tables were assembled from two pipelines whose
  // inputs were rounded differently, so the chain solved exactly does not
  // always share the approximation's (Lambda, R). Empty means the exact
  // column uses the row scenario itself.
  std::vector<QueueParams> exact_scenarios;

  // State-space cap for the exact solve: the chain is truncated at this
  // census with overflow mass discarded, and the Perron vector of the capped
  // kernel is reported. Mirrors the reference computation for the small-ward
  // tables, where the census was capped rather than solved to convergence.
  std::optional<int> census_cap;

  // Regeneration recipe when the sweep follows a regime equation; lets a
  // consistency check rebuild (N, R, mu) from (regime, beta, gamma, s).
  std::optional<RegimeSpec> regime;
  std::optional<QueueParams> regime_base;
};

struct VariantResult {
  VariantKind variant = VariantKind::Exact;
  MetricsValues metrics;
  std::optional<double> scaled_error;    // focus metric, vs Exact
  std::optional<double> relative_error;  // absent when the exact value is 0
  std::optional<double> wasserstein;
  std::optional<MetricsValues> half_width;  // Sim only
};

struct SolveInfo {
  int truncation = 0;
  double residual = 0;
  long iterations = 0;
};

struct RowResult {
  QueueParams params;
  std::string label;
  std::vector<VariantResult> variants;  // order follows spec.variants
  std::optional<SolveInfo> solve;
  double runtime_seconds = 0;
  std::string note;  // skip reason or failure diagnostic; empty on success
};

struct TableResult {
  TableSpec spec;
  std::vector<RowResult> rows;
};

struct RunOptions {
  bool include_slow = false;  // solve rows with N >= slow_threshold exactly
  int slow_threshold = 2946;
  int jobs = 1;
  double solver_tol = 1e-12;
  GridSpec grid;
  SimConfig sim;  // used when the Sim variant is requested; seed offset by row
};

/// Evaluates every scenario x variant. A failing scenario annotates its row
/// and leaves the rest of the table intact. Deterministic given options.
TableResult run_table(const TableSpec& spec, const RunOptions& opts = {});

enum class TrendExpectation { Decreasing, Increasing, BelowBound };

struct TrendVerdict {
  bool pass = false;
  int offending_index = -1;  // first index violating the expectation
};

/// Monotonicity (strict) or bound verdict on a numeric column.
TrendVerdict trend_check(const std::vector<double>& series, TrendExpectation expectation,
                         double bound = 0);

/// The focus-metric scaled-error column for one approximation variant.
/// Rows without that value (skipped or failed) are omitted.
std::vector<double> scaled_error_column(const TableResult& result, VariantKind variant);
std::vector<double> relative_error_column(const TableResult& result, VariantKind variant);

/// Fixed-width text table: two decimals for metrics, two decimals + '%' for
/// error columns.
std::string render_table(const TableResult& result);

void write_csv(const TableResult& result, const std::filesystem::path& file);
void write_meta(const TableResult& result, const std::filesystem::path& file);
/// Writes <out_dir>/<name>/report.csv and <out_dir>/<name>/report.meta.
void write_table_outputs(const TableResult& result, const std::filesystem::path& out_dir);

std::vector<std::string> builtin_table_names();
/// Throws std::invalid_argument for an unknown name.
TableSpec builtin_table(const std::string& name);

}  // namespace geoq

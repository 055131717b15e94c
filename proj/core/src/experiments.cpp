#include "geoq/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace geoq {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string display_name(VariantKind v) {
  switch (v) {
    case VariantKind::Exact: return "Exact";
    case VariantKind::StateDependent: return "Stein";
    case VariantKind::ConstantCoeff: return "Y0";
    default: return "Sim";
  }
}

RowResult eval_row(const TableSpec& spec, std::size_t row_index, const RunOptions& opts) {
  RowResult row;
  row.params = spec.scenarios[row_index];
  row.label = row_index < spec.row_labels.size() ? spec.row_labels[row_index]
                                                 : fmt(row.params.offered_load);
  const auto t0 = std::chrono::steady_clock::now();
  const bool slow = row.params.n_servers >= opts.slow_threshold && !opts.include_slow;

  try {
    const auto arrivals = ArrivalModel::poisson(row.params.arrival_rate);
    std::optional<StationaryPMF> pmf;
    std::optional<MetricsValues> exact;

    for (VariantKind v : spec.variants) {
      VariantResult res;
      res.variant = v;
      switch (v) {
        case VariantKind::Exact: {
          if (slow) {
            row.note = "exact solve skipped (slow row)";
            continue;
          }
          const QueueParams& exact_params = row_index < spec.exact_scenarios.size()
                                                ? spec.exact_scenarios[row_index]
                                                : row.params;
          const auto exact_arrivals = ArrivalModel::poisson(exact_params.arrival_rate);
          if (spec.census_cap) {
            const auto kernel = build_kernel(exact_params, exact_arrivals, *spec.census_cap,
                                             TruncationPolicy::Discard);
            pmf = solve_stationary(kernel, opts.solver_tol);
          } else {
            pmf = solve_auto(exact_params, exact_arrivals, opts.solver_tol);
          }
          res.metrics = exact_metrics(*pmf, exact_params);
          exact = res.metrics;
          SolveInfo info;
          info.truncation = static_cast<int>(pmf->probs.size()) - 1;
          info.residual = pmf->residual;
          info.iterations = pmf->iterations;
          row.solve = info;
          break;
        }
        case VariantKind::StateDependent:
        case VariantKind::ConstantCoeff: {
          const auto variant = v == VariantKind::StateDependent
                                   ? DensityVariant::StateDependent
                                   : DensityVariant::ConstantCoeff;
          const auto density = build_density(row.params, arrivals, variant, opts.grid);
          res.metrics = approx_metrics(density, row.params);
          if (exact) {
            const double e = metric_of(*exact, spec.focus);
            const double a = metric_of(res.metrics, spec.focus);
            res.scaled_error = std::abs(e - a) * row.params.delta;
            if (e != 0.0) res.relative_error = std::abs(e - a) / std::abs(e);
          }
          if (spec.wasserstein && pmf)
            res.wasserstein = distance_report(*pmf, density, row.params).wasserstein;
          break;
        }
        case VariantKind::Sim: {
          SimConfig cfg = opts.sim;
          cfg.seed = opts.sim.seed + row_index;
          cfg.jobs = 1;  // outer rows already run in parallel
          const auto sim = simulate_census(row.params, arrivals, cfg);
          res.metrics = sim.metrics;
          res.half_width = sim.half_width;
          if (exact) {
            const double e = metric_of(*exact, spec.focus);
            const double a = metric_of(res.metrics, spec.focus);
            res.scaled_error = std::abs(e - a) * row.params.delta;
            if (e != 0.0) res.relative_error = std::abs(e - a) / std::abs(e);
          }
          break;
        }
      }
      row.variants.push_back(std::move(res));
    }
  } catch (const std::exception& e) {
    row.note = e.what();
  }
  row.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

std::string variant_name(VariantKind v) {
  switch (v) {
    case VariantKind::Exact: return "exact";
    case VariantKind::StateDependent: return "state_dependent";
    case VariantKind::ConstantCoeff: return "constant_coeff";
    default: return "sim";
  }
}

std::string metric_name(MetricKind m) {
  switch (m) {
    case MetricKind::QueueLen: return "queue_len";
    case MetricKind::AdjQueueLen: return "adj_queue_len";
    case MetricKind::Busy: return "busy";
    default: return "idle_prob";
  }
}

double metric_of(const MetricsValues& values, MetricKind m) {
  switch (m) {
    case MetricKind::QueueLen: return values.queue_len;
    case MetricKind::AdjQueueLen: return values.adj_queue_len;
    case MetricKind::Busy: return values.busy;
    default: return values.idle_prob;
  }
}

TableResult run_table(const TableSpec& spec, const RunOptions& opts) {
  if (spec.scenarios.empty()) throw std::invalid_argument("table spec has no scenarios");
  if (spec.variants.empty()) throw std::invalid_argument("table spec has no variants");
  if ((spec.scaled_error || spec.relative_error || spec.wasserstein) &&
      std::find(spec.variants.begin(), spec.variants.end(), VariantKind::Exact) ==
          spec.variants.end())
    throw std::invalid_argument("error columns require the Exact variant");
  if (!spec.exact_scenarios.empty() && spec.exact_scenarios.size() != spec.scenarios.size())
    throw std::invalid_argument("exact_scenarios must align with scenarios");

  TableResult result;
  result.spec = spec;
  result.rows.resize(spec.scenarios.size());

  const int workers =
      std::clamp<int>(opts.jobs, 1, static_cast<int>(spec.scenarios.size()));
  auto worker = [&](int tid) {
    for (std::size_t i = tid; i < spec.scenarios.size(); i += workers)
      result.rows[i] = eval_row(spec, i, opts);
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  return result;
}

TrendVerdict trend_check(const std::vector<double>& series, TrendExpectation expectation,
                         double bound) {
  TrendVerdict v;
  v.pass = true;
  if (expectation == TrendExpectation::BelowBound) {
    for (std::size_t i = 0; i < series.size(); ++i)
      if (series[i] > bound) return {false, static_cast<int>(i)};
    return v;
  }
  for (std::size_t i = 1; i < series.size(); ++i) {
    const bool ok = expectation == TrendExpectation::Decreasing ? series[i] < series[i - 1]
                                                                : series[i] > series[i - 1];
    if (!ok) return {false, static_cast<int>(i)};
  }
  return v;
}

namespace {

std::vector<double> error_column(const TableResult& result, VariantKind variant,
                                 bool relative) {
  std::vector<double> out;
  for (const auto& row : result.rows)
    for (const auto& res : row.variants)
      if (res.variant == variant) {
        const auto& e = relative ? res.relative_error : res.scaled_error;
        if (e) out.push_back(*e);
      }
  return out;
}

}  // namespace

std::vector<double> scaled_error_column(const TableResult& result, VariantKind variant) {
  return error_column(result, variant, false);
}

std::vector<double> relative_error_column(const TableResult& result, VariantKind variant) {
  return error_column(result, variant, true);
}

std::string render_table(const TableResult& result) {
  const TableSpec& spec = result.spec;
  std::ostringstream os;
  os << spec.name;
  if (!spec.title.empty()) os << ": " << spec.title;
  os << "\n";

  char buf[64];
  auto cell = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof(buf), f, args...);
    os << buf;
  };
  cell("%-10s %6s %10s %8s", "row", "N", "R", "mu");
  for (VariantKind v : spec.variants) {
    cell(" %9s", display_name(v).c_str());
    if (v != VariantKind::Exact) {
      if (spec.scaled_error) cell(" %10s", "scaled err");
      if (spec.relative_error) cell(" %8s", "rel err");
    }
  }
  os << "\n";

  for (const auto& row : result.rows) {
    cell("%-10s %6d %10.2f %8.4f", row.label.c_str(), row.params.n_servers,
         row.params.offered_load, row.params.service_prob);
    for (VariantKind v : spec.variants) {
      const VariantResult* res = nullptr;
      for (const auto& r : row.variants)
        if (r.variant == v) res = &r;
      if (!res) {
        cell(" %9s", "-");
        if (v != VariantKind::Exact) {
          if (spec.scaled_error) cell(" %10s", "-");
          if (spec.relative_error) cell(" %8s", "-");
        }
        continue;
      }
      cell(" %9.2f", metric_of(res->metrics, spec.focus));
      if (v != VariantKind::Exact) {
        if (spec.scaled_error) {
          if (res->scaled_error)
            cell(" %9.2f%%", 100.0 * *res->scaled_error);
          else
            cell(" %10s", "-");
        }
        if (spec.relative_error) {
          if (res->relative_error)
            cell(" %7.2f%%", 100.0 * *res->relative_error);
          else
            cell(" %8s", "-");
        }
      }
    }
    if (!row.note.empty()) os << "  [" << row.note << "]";
    os << "\n";
  }
  return os.str();
}

void write_csv(const TableResult& result, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "row,label,n_servers,offered_load,service_prob,variant,queue_len,adj_queue_len,"
         "busy,idle_prob,scaled_error,relative_error,wasserstein,hw_queue_len,"
         "hw_adj_queue_len,hw_busy,hw_idle_prob,note\n";
  auto opt = [&](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    for (const auto& res : row.variants) {
      out << i << ',' << row.label << ',' << row.params.n_servers << ','
          << fmt(row.params.offered_load) << ',' << fmt(row.params.service_prob) << ','
          << variant_name(res.variant) << ',' << fmt(res.metrics.queue_len) << ','
          << fmt(res.metrics.adj_queue_len) << ',' << fmt(res.metrics.busy) << ','
          << fmt(res.metrics.idle_prob) << ',' << opt(res.scaled_error) << ','
          << opt(res.relative_error) << ',' << opt(res.wasserstein) << ','
          << (res.half_width ? fmt(res.half_width->queue_len) : std::string()) << ','
          << (res.half_width ? fmt(res.half_width->adj_queue_len) : std::string()) << ','
          << (res.half_width ? fmt(res.half_width->busy) : std::string()) << ','
          << (res.half_width ? fmt(res.half_width->idle_prob) : std::string()) << ','
          << row.note << '\n';
    }
    if (row.variants.empty())
      out << i << ',' << row.label << ',' << row.params.n_servers << ','
          << fmt(row.params.offered_load) << ',' << fmt(row.params.service_prob)
          << ",,,,,,,,,,,,," << row.note << '\n';
  }
}

void write_meta(const TableResult& result, const std::filesystem::path& file) {
  ordered_json meta;
  meta["name"] = result.spec.name;
  meta["title"] = result.spec.title;
  meta["focus_metric"] = metric_name(result.spec.focus);
  {
    std::vector<std::string> vs;
    for (VariantKind v : result.spec.variants) vs.push_back(variant_name(v));
    meta["variants"] = vs;
  }
  if (result.spec.census_cap) meta["census_cap"] = *result.spec.census_cap;
  ordered_json rows = ordered_json::array();
  for (const auto& row : result.rows) {
    ordered_json r;
    r["label"] = row.label;
    r["n_servers"] = row.params.n_servers;
    r["offered_load"] = row.params.offered_load;
    r["service_prob"] = row.params.service_prob;
    const std::size_t idx = static_cast<std::size_t>(&row - result.rows.data());
    if (idx < result.spec.exact_scenarios.size()) {
      const auto& ep = result.spec.exact_scenarios[idx];
      if (ep.offered_load != row.params.offered_load ||
          ep.service_prob != row.params.service_prob)
        r["exact_offered_load"] = ep.offered_load;
    }
    if (row.solve) {
      r["truncation"] = row.solve->truncation;
      r["residual"] = row.solve->residual;
      r["iterations"] = row.solve->iterations;
    }
    r["runtime_seconds"] = row.runtime_seconds;
    if (!row.note.empty()) r["note"] = row.note;
    rows.push_back(std::move(r));
  }
  meta["rows"] = std::move(rows);

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << meta.dump(2) << '\n';
}

void write_table_outputs(const TableResult& result, const std::filesystem::path& out_dir) {
  const auto dir = out_dir / result.spec.name;
  std::filesystem::create_directories(dir);
  write_csv(result, dir / "report.csv");
  write_meta(result, dir / "report.meta");
}

}  // namespace geoq

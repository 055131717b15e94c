#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "geoq/config.hpp"
#include "geoq/diffusion.hpp"
#include "geoq/experiments.hpp"
#include "geoq/markov.hpp"
#include "geoq/model.hpp"
#include "geoq/sim.hpp"

namespace {

using geoq::ArrivalModel;
using geoq::MetricsValues;
using geoq::QueueParams;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // flag/config/stability validation
constexpr int kExitNumeric = 2;  // non-convergence or failed verification

// Scenario flags shared by every subcommand.
struct ScenarioFlags {
  int servers = 0;
  double arrival_rate = 0;
  double load = 0;
  double service_prob = 0;
  double service_days = 0;
  std::string config_path;
  std::string pmf_csv;  // comma-separated general arrival pmf

  CLI::Option* opt_rate = nullptr;
  CLI::Option* opt_load = nullptr;
  CLI::Option* opt_prob = nullptr;
  CLI::Option* opt_days = nullptr;
  CLI::Option* opt_config = nullptr;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
  cmd->add_option("--servers,-N", f.servers, "Number of servers N");
  f.opt_rate = cmd->add_option("--arrival-rate", f.arrival_rate, "Mean arrivals per day");
  f.opt_load = cmd->add_option("--load", f.load, "Utilization rho (Lambda = rho N mu)");
  f.opt_prob = cmd->add_option("--service-prob", f.service_prob, "Daily discharge probability mu");
  f.opt_days = cmd->add_option("--service-days", f.service_days, "Mean length of stay (mu = 1/days)");
  f.opt_config = cmd->add_option("--config", f.config_path, "JSON scenario config");
  cmd->add_option("--arrival-pmf", f.pmf_csv, "General arrival pmf, comma-separated");
  f.opt_rate->excludes(f.opt_load);
  f.opt_prob->excludes(f.opt_days);
  f.opt_config->excludes(f.opt_rate);
  f.opt_config->excludes(f.opt_load);
  f.opt_config->excludes(f.opt_prob);
  f.opt_config->excludes(f.opt_days);
}

geoq::ScenarioConfig resolve_scenario(const ScenarioFlags& f) {
  if (!f.config_path.empty()) return geoq::load_scenario_config(f.config_path);

  if (f.servers <= 0) throw std::invalid_argument("--servers is required (or use --config)");
  double mu = 0;
  if (f.opt_prob->count()) {
    mu = f.service_prob;
  } else if (f.opt_days->count()) {
    if (!(f.service_days > 1)) throw std::invalid_argument("--service-days must be > 1");
    mu = 1.0 / f.service_days;
  } else {
    throw std::invalid_argument("one of --service-prob / --service-days is required");
  }
  double lambda = 0;
  if (f.opt_rate->count()) {
    lambda = f.arrival_rate;
  } else if (f.opt_load->count()) {
    lambda = f.load * f.servers * mu;
  } else {
    throw std::invalid_argument("one of --arrival-rate / --load is required");
  }
  auto params = QueueParams::make(f.servers, lambda, mu);

  ArrivalModel arrivals = ArrivalModel::poisson(lambda);
  if (!f.pmf_csv.empty()) {
    std::vector<double> pmf;
    std::stringstream ss(f.pmf_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) pmf.push_back(std::stod(tok));
    arrivals = ArrivalModel::general(std::move(pmf));
    arrivals.require_paired(params);
  }
  return {params, std::move(arrivals), std::nullopt};
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("GEOQ_OUT_DIR")) return env;
  return "geoq-out";
}

void print_metrics(const char* tag, const MetricsValues& m) {
  std::printf("%-8s  E(X-N)+ %10.4f   E(X-R)+ %10.4f   E(X^N) %12.4f   P(X<=N) %8.6f\n", tag,
              m.queue_len, m.adj_queue_len, m.busy, m.idle_prob);
}

ordered_json metrics_json(const MetricsValues& m) {
  return {{"queue_len", m.queue_len},
          {"adj_queue_len", m.adj_queue_len},
          {"busy", m.busy},
          {"idle_prob", m.idle_prob}};
}

int run_solve(const ScenarioFlags& flags, double tol, const std::string& out,
              const std::string& format) {
  auto sc = resolve_scenario(flags);
  auto pmf = geoq::solve_auto(sc.params, sc.arrivals, tol);
  auto metrics = geoq::exact_metrics(pmf, sc.params);
  if (!out.empty()) {
    geoq::write_pmf_csv(pmf, out);
    geoq::write_pmf_meta(pmf, out + ".meta");
  }
  if (format == "json") {
    ordered_json doc;
    doc["K"] = pmf.probs.size() - 1;
    doc["residual"] = pmf.residual;
    doc["iterations"] = pmf.iterations;
    doc["metrics"] = metrics_json(metrics);
    std::cout << doc.dump(2) << "\n";
  } else {
    std::printf("N=%d  R=%.4f  mu=%.6f  K=%zu  residual=%.3e  iterations=%ld\n",
                sc.params.n_servers, sc.params.offered_load, sc.params.service_prob,
                pmf.probs.size() - 1, pmf.residual, pmf.iterations);
    print_metrics("Exact", metrics);
  }
  return kExitOk;
}

int run_approx(const ScenarioFlags& flags, const std::string& variant_name,
               const std::string& out, const std::string& format) {
  auto sc = resolve_scenario(flags);
  geoq::DensityVariant variant;
  if (variant_name == "stein" || variant_name == "state-dependent")
    variant = geoq::DensityVariant::StateDependent;
  else if (variant_name == "y0" || variant_name == "constant")
    variant = geoq::DensityVariant::ConstantCoeff;
  else
    throw std::invalid_argument("--variant must be stein or y0");
  auto density = geoq::build_density(sc.params, sc.arrivals, variant);
  auto metrics = geoq::approx_metrics(density, sc.params);
  if (!out.empty()) geoq::write_density_csv(density, out);
  if (format == "json") {
    ordered_json doc;
    doc["variant"] = variant_name;
    doc["metrics"] = metrics_json(metrics);
    std::cout << doc.dump(2) << "\n";
  } else {
    print_metrics(variant == geoq::DensityVariant::StateDependent ? "Stein" : "Y0", metrics);
  }
  return kExitOk;
}

int run_compare(const ScenarioFlags& flags, double tol, const std::string& format,
                bool with_wasserstein) {
  auto sc = resolve_scenario(flags);
  auto pmf = geoq::solve_auto(sc.params, sc.arrivals, tol);
  auto sd = geoq::build_density(sc.params, sc.arrivals, geoq::DensityVariant::StateDependent);
  auto cc = geoq::build_density(sc.params, sc.arrivals, geoq::DensityVariant::ConstantCoeff);
  auto rep_sd = geoq::distance_report(pmf, sd, sc.params);
  auto rep_cc = geoq::distance_report(pmf, cc, sc.params);

  if (format == "json") {
    ordered_json doc;
    doc["exact"] = metrics_json(rep_sd.exact);
    doc["stein"] = metrics_json(rep_sd.approx);
    doc["y0"] = metrics_json(rep_cc.approx);
    if (with_wasserstein) {
      doc["wasserstein_stein"] = rep_sd.wasserstein;
      doc["wasserstein_y0"] = rep_cc.wasserstein;
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::printf("N=%d  R=%.4f  mu=%.6f\n", sc.params.n_servers, sc.params.offered_load,
                sc.params.service_prob);
    print_metrics("Exact", rep_sd.exact);
    print_metrics("Stein", rep_sd.approx);
    print_metrics("Y0", rep_cc.approx);
    auto rel = [](const geoq::MetricError& e) { return e.relative ? 100.0 * *e.relative : 0.0; };
    std::printf("%-8s  rel err %9.2f%%  scaled err %6.2f%%\n", "Stein",
                rel(rep_sd.queue_len), 100.0 * rep_sd.queue_len.scaled);
    std::printf("%-8s  rel err %9.2f%%  scaled err %6.2f%%\n", "Y0", rel(rep_cc.queue_len),
                100.0 * rep_cc.queue_len.scaled);
    if (with_wasserstein)
      std::printf("wasserstein  Stein %.6f  Y0 %.6f\n", rep_sd.wasserstein, rep_cc.wasserstein);
  }
  return kExitOk;
}

int run_sweep(const ScenarioFlags& flags, const std::string& regime_name, double beta,
              double s, double gamma, const std::string& multipliers_csv,
              const std::filesystem::path& out_dir, int jobs, bool include_slow) {
  auto sc = resolve_scenario(flags);
  geoq::RegimeSpec rs;
  if (sc.sweep) {
    rs = *sc.sweep;
  } else {
    auto regime = geoq::parse_regime(regime_name);
    if (!regime) throw std::invalid_argument("--regime must be qd, qed or nds");
    rs.regime = *regime;
    rs.beta = beta > 0 ? beta : geoq::beta_from_base(*regime, sc.params);
    rs.s_exponent = s;
    if (gamma > 0) rs.gamma = gamma;
    std::stringstream ss(multipliers_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) rs.load_multipliers.push_back(std::stod(tok));
    if (rs.load_multipliers.empty())
      throw std::invalid_argument("--multipliers is required for an inline sweep");
  }

  geoq::TableSpec spec;
  spec.name = "sweep_" + geoq::regime_name(rs.regime);
  spec.title = "regime sweep from N=" + std::to_string(sc.params.n_servers);
  spec.scenarios = geoq::generate_scenarios(rs, sc.params);
  spec.variants = {geoq::VariantKind::Exact, geoq::VariantKind::StateDependent};
  spec.scaled_error = true;
  spec.regime = rs;
  spec.regime_base = sc.params;

  geoq::RunOptions opts;
  opts.jobs = jobs;
  opts.include_slow = include_slow;
  auto result = geoq::run_table(spec, opts);
  geoq::write_table_outputs(result, out_dir);
  std::cout << geoq::render_table(result);
  return kExitOk;
}

int run_verify(const ScenarioFlags& flags, double tol) {
  auto sc = resolve_scenario(flags);
  auto pmf = geoq::solve_auto(sc.params, sc.arrivals, tol);

  bool all_pass = true;
  for (const auto& check : geoq::verify_bounds(pmf, sc.params)) {
    all_pass = all_pass && check.pass;
    std::printf("%-22s  lhs %12.6f  %s  rhs %12.6f  [%s]\n", check.name.c_str(), check.lhs,
                check.equality ? "=" : "<=", check.rhs, check.pass ? "PASS" : "FAIL");
  }
  const std::vector<std::vector<double>> polys = {{0, 1}, {0, 0, 1}};
  for (const auto& poly : polys) {
    const double residual = geoq::check_bar(pmf, sc.params, sc.arrivals, poly);
    const bool ok = residual < 1e-8;
    all_pass = all_pass && ok;
    std::printf("bar_residual_deg%zu      %12.3e  [%s]\n", poly.size() - 1, residual,
                ok ? "PASS" : "FAIL");
  }
  return all_pass ? kExitOk : kExitNumeric;
}

int run_simulate(const ScenarioFlags& flags, geoq::SimConfig cfg, const std::string& out,
                 const std::string& format) {
  auto sc = resolve_scenario(flags);
  auto result = geoq::simulate_census(sc.params, sc.arrivals, cfg);
  if (!out.empty()) {
    geoq::write_sim_csv(result, out);
    geoq::write_sim_meta(result, out + ".meta");
  }
  if (format == "json") {
    ordered_json doc;
    doc["metrics"] = metrics_json(result.metrics);
    doc["half_width"] = metrics_json(result.half_width);
    doc["rng"] = result.rng;
    std::cout << doc.dump(2) << "\n";
  } else {
    print_metrics("Sim", result.metrics);
    print_metrics("+/-", result.half_width);
  }
  return kExitOk;
}

int run_tables(std::vector<std::string> names, const std::filesystem::path& out_dir, int jobs,
               bool include_slow, bool quiet) {
  const auto all = geoq::builtin_table_names();
  std::vector<std::string> selected;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    selected = all;
  } else {
    for (const auto& want : names) {
      bool matched = false;
      for (const auto& name : all)
        if (name == want || name.rfind(want, 0) == 0) {
          selected.push_back(name);
          matched = true;
        }
      if (!matched) throw std::invalid_argument("unknown table: " + want);
    }
  }

  geoq::RunOptions opts;
  opts.jobs = jobs;
  opts.include_slow = include_slow;
  for (const auto& name : selected) {
    auto result = geoq::run_table(geoq::builtin_table(name), opts);
    geoq::write_table_outputs(result, out_dir);
    if (!quiet) std::cout << geoq::render_table(result) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GI/Geo/N stationary analysis: exact solve, diffusion approximation, "
               "error reports"};
  app.require_subcommand(1);

  std::string format = "pretty";
  std::string out;
  std::filesystem::path out_dir = default_out_dir();
  double tol = 1e-12;
  int jobs = 1;
  bool include_slow = false;
  std::uint64_t seed = 0;
  app.add_option("--format", format, "Output format: pretty, csv, json")
      ->check(CLI::IsMember({"pretty", "csv", "json"}));
  app.add_option("--out", out, "Output file for the primary artifact (CSV)");
  app.add_option("--out-dir", out_dir, "Output directory (default $GEOQ_OUT_DIR)");
  app.add_option("--tol", tol, "Stationary solver tolerance");
  app.add_option("--jobs", jobs, "Worker thread cap")->check(CLI::PositiveNumber);
  app.add_flag("--include-slow", include_slow, "Also solve rows with N >= 2946 exactly");
  app.add_option("--seed", seed, "RNG seed");

  ScenarioFlags f_solve, f_approx, f_compare, f_sweep, f_verify, f_sim;

  auto* cmd_solve = app.add_subcommand("solve", "Exact stationary distribution and metrics");
  add_scenario_flags(cmd_solve, f_solve);

  auto* cmd_approx = app.add_subcommand("approx", "Diffusion density and approximate metrics");
  add_scenario_flags(cmd_approx, f_approx);
  std::string variant = "stein";
  cmd_approx->add_option("--variant", variant, "stein (state-dependent) or y0 (constant)");

  auto* cmd_compare = app.add_subcommand("compare", "Exact vs both approximations");
  add_scenario_flags(cmd_compare, f_compare);
  bool with_wasserstein = false;
  cmd_compare->add_flag("--wasserstein", with_wasserstein, "Also report Wasserstein distances");

  auto* cmd_sweep = app.add_subcommand("sweep", "Scale a base scenario through a regime");
  add_scenario_flags(cmd_sweep, f_sweep);
  std::string regime = "qed", multipliers;
  double beta = 0, s_exp = 0, gamma = 0;
  cmd_sweep->add_option("--regime", regime, "qd, qed or nds");
  cmd_sweep->add_option("--beta", beta, "Spare-capacity coefficient (default from base)");
  cmd_sweep->add_option("--s", s_exp, "Service-rate exponent in mu = gamma R^-s");
  cmd_sweep->add_option("--gamma", gamma, "Service-rate coefficient (default from base)");
  cmd_sweep->add_option("--multipliers", multipliers, "Comma-separated load multipliers");

  auto* cmd_verify = app.add_subcommand("verify", "Idle-probability/moment bounds and BAR");
  add_scenario_flags(cmd_verify, f_verify);

  auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo cross-validation");
  add_scenario_flags(cmd_sim, f_sim);
  geoq::SimConfig sim_cfg;
  cmd_sim->add_option("--warmup", sim_cfg.warmup_epochs, "Warmup epochs (default 50/mu)");
  cmd_sim->add_option("--samples", sim_cfg.sample_epochs, "Sampled epochs per replication");
  cmd_sim->add_option("--replications", sim_cfg.replications, "Independent replications");

  auto* cmd_tables = app.add_subcommand("tables", "Reproduce builtin report tables");
  std::vector<std::string> table_names;
  bool quiet = false;
  cmd_tables->add_option("names", table_names, "Table names (prefix ok; default all)");
  cmd_tables->add_flag("--quiet", quiet, "Skip rendered output, write files only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_solve->parsed()) return run_solve(f_solve, tol, out, format);
    if (cmd_approx->parsed()) return run_approx(f_approx, variant, out, format);
    if (cmd_compare->parsed()) return run_compare(f_compare, tol, format, with_wasserstein);
    if (cmd_sweep->parsed())
      return run_sweep(f_sweep, regime, beta, s_exp, gamma, multipliers, out_dir, jobs,
                       include_slow);
    if (cmd_verify->parsed()) return run_verify(f_verify, tol);
    if (cmd_sim->parsed()) {
      sim_cfg.seed = seed;
      sim_cfg.jobs = jobs;
      return run_simulate(f_sim, sim_cfg, out, format);
    }
    if (cmd_tables->parsed()) return run_tables(table_names, out_dir, jobs, include_slow, quiet);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "geoq/experiments.hpp"

namespace geoq {
namespace {

constexpr double kMuFixed = 1.0 / 5.3;

// Hospital baseline behind every regime sweep: daily bed requests and the
// mean length of stay. The baseline row of each sweep solves the chain at
// this arrival rate, while the approximations use the row's tabulated R.
constexpr double kLambdaBase = 90.95;

// Offered load the sweeps scale up: recovered from the QED design relation
// N - R = beta sqrt(R) at the baseline N = 504 with beta = 0.9994.
double design_base_load() {
  const double beta = 0.9994;
  const double root = (-beta + std::sqrt(beta * beta + 4.0 * 504)) / 2.0;
  return root * root;  // 482.0574
}

struct NR {
  int n;
  double r;
};

// (N, R) sequences per regime family; N is table-defined (rounded), so the
// printed values are authoritative rather than the regime formula.
const NR kQed[] = {{504, 482.06}, {995, 963.97},   {1484, 1446.00},
                   {1972, 1928.12}, {2946, 2892.25}, {3919, 3856.93}};
const NR kNds[] = {{495, 482},   {977, 964},   {1459, 1446},
                   {1941, 1928}, {2905, 2892}, {3869, 3856}};
const NR kQd[] = {{530, 482.06},   {1061, 965.02},  {1591, 1447.08},
                  {2121, 1929.14}, {3182, 2894.16}, {4242, 3858.28}};

std::string fmt_r(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "R=%.2f", r);
  return buf;
}

TableSpec regime_sweep(std::string name, std::string title, const NR* rows, std::size_t count,
                       Regime regime, double beta, double s, double gamma_or_mu) {
  TableSpec spec;
  spec.name = std::move(name);
  spec.title = std::move(title);
  spec.variants = {VariantKind::Exact, VariantKind::StateDependent};
  spec.scaled_error = true;
  for (std::size_t i = 0; i < count; ++i) {
    const double mu = s == 0.0 ? gamma_or_mu : gamma_or_mu * std::pow(rows[i].r, -s);
    spec.scenarios.push_back(QueueParams::make(rows[i].n, rows[i].r * mu, mu));
    spec.row_labels.push_back(fmt_r(rows[i].r));
  }

  RegimeSpec rs;
  rs.regime = regime;
  rs.beta = beta;
  rs.s_exponent = s;
  rs.load_multipliers = {1, 2, 3, 4, 6, 8};
  if (s != 0.0) rs.gamma = gamma_or_mu;
  spec.regime = rs;
  spec.regime_base = spec.scenarios.front();

  // The baseline row's exact chain runs at the hospital arrival rate; the
  // tabulated R of that row is a rounded derivative of it.
  spec.exact_scenarios = spec.scenarios;
  spec.exact_scenarios[0] =
      QueueParams::make(spec.scenarios[0].n_servers, kLambdaBase, kMuFixed);
  return spec;
}

TableSpec load_sweep(std::string name, std::string title, int n_servers, MetricKind focus) {
  TableSpec spec;
  spec.name = std::move(name);
  spec.title = std::move(title);
  spec.variants = {VariantKind::Exact, VariantKind::StateDependent,
                   VariantKind::ConstantCoeff};
  spec.focus = focus;
  spec.relative_error = true;
  for (int load : {88, 90, 92, 94, 96}) {
    const double r = n_servers * load / 100.0;
    spec.scenarios.push_back(QueueParams::make(n_servers, r * kMuFixed, kMuFixed));
    spec.row_labels.push_back(std::to_string(load) + "%");
  }
  return spec;
}

TableSpec service_sweep(std::string name, std::string title, int n_servers, double r) {
  TableSpec spec;
  spec.name = std::move(name);
  spec.title = std::move(title);
  spec.variants = {VariantKind::Exact, VariantKind::StateDependent,
                   VariantKind::ConstantCoeff};
  spec.relative_error = true;
  for (int days = 2; days <= 10; ++days) {
    const double mu = 1.0 / days;
    spec.scenarios.push_back(QueueParams::make(n_servers, r * mu, mu));
    spec.row_labels.push_back("1/mu=" + std::to_string(days));
  }
  return spec;
}

}  // namespace

std::vector<std::string> builtin_table_names() {
  return {"table2",         "table3_qed_s_half", "table3_qed_s1", "table4_nds_s_half",
          "table4_nds_s1",  "table5",            "table6",        "c7",
          "c8_qd_s_half",   "c8_qd_s1",          "c9",            "c10",
          "c11",            "c12",               "c13"};
}

TableSpec builtin_table(const std::string& name) {
  const std::size_t six = 6;
  if (name == "table2") {
    auto spec = regime_sweep(name, "NDS regime, beta = 13, mu = 1/5.3", kNds, six, Regime::NDS,
                             13.0, 0.0, kMuFixed);
    // The sweep's exact column scales the unrounded baseline load directly,
    // while the approximations use the tabulated integer R.
    const double r0 = design_base_load();
    const int mult[] = {1, 2, 3, 4, 6, 8};
    for (std::size_t i = 1; i < spec.exact_scenarios.size(); ++i)
      spec.exact_scenarios[i] =
          QueueParams::make(kNds[i].n, r0 * mult[i] * kMuFixed, kMuFixed);
    return spec;
  }
  if (name == "table3_qed_s_half")
    return regime_sweep(name, "QED regime, beta = 0.9994, mu = 4.1426/R^(1/2)", kQed, six,
                        Regime::QED, 0.9994, 0.5, 4.1426);
  if (name == "table3_qed_s1")
    return regime_sweep(name, "QED regime, beta = 0.9994, mu = 90.9542/R", kQed, six,
                        Regime::QED, 0.9994, 1.0, 90.9542);
  if (name == "table4_nds_s_half")
    return regime_sweep(name, "NDS regime, beta = 13, mu = 4.1424/R^(1/2)", kNds, six,
                        Regime::NDS, 13.0, 0.5, 4.1424);
  if (name == "table4_nds_s1")
    return regime_sweep(name, "NDS regime, beta = 13, mu = 90.9434/R", kNds, six, Regime::NDS,
                        13.0, 1.0, 90.9434);
  if (name == "table5") {
    auto spec = load_sweep(name, "expected queue length, N = 18, mu = 1/5.3", 18,
                           MetricKind::QueueLen);
    spec.census_cap = 111;
    return spec;
  }
  if (name == "table6")
    return load_sweep(name, "expected queue length, N = 66, mu = 1/5.3", 66,
                      MetricKind::QueueLen);
  if (name == "c7") {
    auto spec = regime_sweep(name, "QD regime, beta = 0.0995, mu = 1/5.3", kQd, six,
                             Regime::QD, 0.0995, 0.0, kMuFixed);
    spec.focus = MetricKind::AdjQueueLen;
    return spec;
  }
  if (name == "c8_qd_s_half") {
    auto spec = regime_sweep(name, "QD regime, beta = 0.0995, mu = 4.1426/R^(1/2)", kQd, six,
                             Regime::QD, 0.0995, 0.5, 4.1426);
    spec.focus = MetricKind::AdjQueueLen;
    return spec;
  }
  if (name == "c8_qd_s1") {
    auto spec = regime_sweep(name, "QD regime, beta = 0.0995, mu = 90.9542/R", kQd, six,
                             Regime::QD, 0.0995, 1.0, 90.9542);
    spec.focus = MetricKind::AdjQueueLen;
    return spec;
  }
  if (name == "c9")
    return regime_sweep(name, "QED regime, beta = 0.9994, mu = 1996.9729/R^(3/2)", kQed, six,
                        Regime::QED, 0.9994, 1.5, 1996.9729);
  if (name == "c10")
    return regime_sweep(name, "NDS regime, beta = 13, mu = 1996.6166/R^(3/2)", kNds, six,
                        Regime::NDS, 13.0, 1.5, 1996.6166);
  if (name == "c11")
    return load_sweep(name, "adjusted queue length, N = 132, mu = 1/5.3", 132,
                      MetricKind::AdjQueueLen);
  if (name == "c12")
    return service_sweep(name, "expected queue length, N = 18, R = 16.20", 18, 16.20);
  if (name == "c13")
    return service_sweep(name, "expected queue length, N = 66, R = 59.40", 66, 59.40);
  throw std::invalid_argument("unknown builtin table: " + name);
}

}  // namespace geoq

#include "geoq/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace geoq {

QueueParams QueueParams::make(int n_servers, double arrival_rate, double service_prob) {
  if (n_servers < 1) throw std::invalid_argument("n_servers must be >= 1");
  if (!(arrival_rate > 0)) throw std::invalid_argument("arrival_rate must be > 0");
  if (!(service_prob > 0 && service_prob < 1))
    throw std::invalid_argument("service_prob must lie in (0,1)");

  QueueParams p;
  p.n_servers = n_servers;
  p.arrival_rate = arrival_rate;
  p.service_prob = service_prob;
  p.offered_load = arrival_rate / service_prob;
  if (!(p.offered_load < n_servers)) {
    std::ostringstream os;
    os << "unstable configuration: offered load R = " << p.offered_load
       << " must be < N = " << n_servers;
    throw std::invalid_argument(os.str());
  }
  if (n_servers - p.offered_load < 1e-9) {
    std::ostringstream os;
    os << "near-critical configuration rejected: N - R = " << (n_servers - p.offered_load)
       << " < 1e-9 (mixing time blows up)";
    throw std::invalid_argument(os.str());
  }
  p.delta = 1.0 / std::sqrt(p.offered_load);
  p.zeta = (p.offered_load - n_servers) * p.delta;
  return p;
}

ArrivalModel ArrivalModel::poisson(double mean) {
  if (!(mean > 0)) throw std::invalid_argument("Poisson mean must be > 0");
  ArrivalModel m;
  m.kind_ = ArrivalKind::Poisson;
  m.mean_ = mean;
  m.variance_ = mean;
  return m;
}

ArrivalModel ArrivalModel::general(std::vector<double> pmf) {
  if (pmf.empty()) throw std::invalid_argument("general arrival pmf must be nonempty");
  double sum = 0;
  for (double v : pmf) {
    if (v < 0) throw std::invalid_argument("general arrival pmf entries must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("general arrival pmf must sum to 1 within 1e-12");

  ArrivalModel m;
  m.kind_ = ArrivalKind::GeneralPmf;
  m.pmf_ = std::move(pmf);
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < m.pmf_.size(); ++i) {
    mean += m.pmf_[i] * static_cast<double>(i);
    m2 += m.pmf_[i] * static_cast<double>(i) * static_cast<double>(i);
  }
  if (!(mean > 0)) throw std::invalid_argument("general arrival pmf must have positive mean");
  m.mean_ = mean;
  m.variance_ = m2 - mean * mean;
  return m;
}

double ArrivalModel::raw_moment(int k) const {
  if (k < 0 || k > 4) throw std::invalid_argument("raw_moment supports k in 0..4");
  if (kind_ == ArrivalKind::GeneralPmf) {
    double acc = 0;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      acc += pmf_[i] * std::pow(static_cast<double>(i), k);
    return acc;
  }
  const double L = mean_;
  switch (k) {
    case 0: return 1.0;
    case 1: return L;
    case 2: return L + L * L;
    case 3: return L + 3 * L * L + L * L * L;
    default: return L + 7 * L * L + 6 * L * L * L + L * L * L * L;
  }
}

ArrivalModel::Window ArrivalModel::pmf_window(double drop) const {
  Window w;
  if (kind_ == ArrivalKind::GeneralPmf) {
    // Trim tails of the given vector.
    int lo = 0, hi = static_cast<int>(pmf_.size()) - 1;
    while (lo < hi && pmf_[lo] < drop) ++lo;
    while (hi > lo && pmf_[hi] < drop) --hi;
    w.first = lo;
    w.p.assign(pmf_.begin() + lo, pmf_.begin() + hi + 1);
    double kept = std::accumulate(w.p.begin(), w.p.end(), 0.0);
    w.dropped = 1.0 - kept;
    return w;
  }
  // Poisson: recur from the mode in both directions until entries fall
  // below `drop`.
  const double L = mean_;
  const int mode = static_cast<int>(std::floor(L));
  const double logp_mode = mode * std::log(L) - L - std::lgamma(mode + 1.0);
  std::vector<double> down, up;
  double lp = logp_mode;
  for (int k = mode; k >= 0; --k) {
    double v = std::exp(lp);
    if (v < drop && k < mode) break;
    down.push_back(v);
    lp += std::log((double)k) - std::log(L);  // p(k-1) = p(k) * k / L
  }
  lp = logp_mode;
  for (int k = mode + 1;; ++k) {
    lp += std::log(L) - std::log((double)k);  // p(k) = p(k-1) * L / k
    double v = std::exp(lp);
    if (v < drop) break;
    up.push_back(v);
  }
  w.first = mode - static_cast<int>(down.size()) + 1;
  w.p.assign(down.rbegin(), down.rend());
  w.p.insert(w.p.end(), up.begin(), up.end());
  double kept = std::accumulate(w.p.begin(), w.p.end(), 0.0);
  w.dropped = 1.0 - kept;
  return w;
}

void ArrivalModel::require_paired(const QueueParams& params) const {
  double rel = std::abs(mean_ - params.arrival_rate) / params.arrival_rate;
  if (rel > 1e-9) {
    std::ostringstream os;
    os << "arrival model mean " << mean_ << " does not match Lambda = " << params.arrival_rate;
    throw std::invalid_argument(os.str());
  }
}

double drift_b(double x, const QueueParams& params) {
  const double mu = params.service_prob;
  const double zeta = params.zeta;
  if (x <= -zeta) return -mu * x;
  return mu * zeta;
}

double diffusion_a(double x, const QueueParams& params, const ArrivalModel& arrivals) {
  const double mu = params.service_prob;
  const double delta = params.delta;
  const double zeta = params.zeta;
  const double c = arrivals.c_a();
  const double sqrt_r = 1.0 / delta;
  if (x <= -sqrt_r) return mu * ((c - 1.0) + params.arrival_rate);
  const double y = std::min(x, -zeta);
  return mu * (c - mu + delta * (1.0 - mu) * y + mu * y * y);
}

double regime_exponent(Regime r) {
  switch (r) {
    case Regime::QD: return 1.0;
    case Regime::QED: return 0.5;
    default: return 0.0;
  }
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::QD: return "qd";
    case Regime::QED: return "qed";
    default: return "nds";
  }
}

std::optional<Regime> parse_regime(const std::string& name) {
  if (name == "qd" || name == "QD") return Regime::QD;
  if (name == "qed" || name == "QED") return Regime::QED;
  if (name == "nds" || name == "NDS") return Regime::NDS;
  return std::nullopt;
}

double beta_from_base(Regime regime, const QueueParams& base) {
  const double q = regime_exponent(regime);
  return (base.n_servers - base.offered_load) / std::pow(base.offered_load, q);
}

std::vector<QueueParams> generate_scenarios(const RegimeSpec& spec, const QueueParams& base) {
  if (spec.load_multipliers.empty())
    throw std::invalid_argument("regime spec needs at least one load multiplier");
  if (!(spec.beta > 0)) throw std::invalid_argument("regime spec beta must be > 0");
  const double q = regime_exponent(spec.regime);
  const double s = spec.s_exponent;
  if (s < 0) throw std::invalid_argument("regime spec s must be >= 0");
  const double gamma =
      spec.gamma.value_or(base.service_prob * std::pow(base.offered_load, s));

  std::vector<QueueParams> out;
  out.reserve(spec.load_multipliers.size());
  for (double m : spec.load_multipliers) {
    if (!(m > 0)) throw std::invalid_argument("load multipliers must be > 0");
    const double r = m * base.offered_load;
    const int n = static_cast<int>(std::llround(r + spec.beta * std::pow(r, q)));
    const double mu = (s == 0.0) ? base.service_prob : gamma * std::pow(r, -s);
    if (!(mu > 0 && mu < 1)) {
      std::ostringstream os;
      os << "multiplier " << m << " yields mu = " << mu << " outside (0,1)";
      throw std::invalid_argument(os.str());
    }
    try {
      out.push_back(QueueParams::make(n, r * mu, mu));
    } catch (const std::invalid_argument& e) {
      std::ostringstream os;
      os << "multiplier " << m << " rejected: " << e.what();
      throw std::invalid_argument(os.str());
    }
  }
  return out;
}

}  // namespace geoq

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace geoq {

/// Parameters of the GI/Geo/N discrete-time queue: N servers, mean arrival
/// count per epoch, and per-epoch departure probability for each busy server.
/// Derived quantities (offered load R, delta = 1/sqrt(R), spare-capacity
/// scale zeta = (R - N)/sqrt(R) < 0) are computed once at construction.
/// Immutable after construction.
struct QueueParams {
  int n_servers = 0;        // N
  double arrival_rate = 0;  // Lambda, customers per epoch (one epoch = one day)
  double service_prob = 0;  // mu in (0,1)

  double offered_load = 0;  // R = Lambda / mu
  double delta = 0;         // 1 / sqrt(R)
  double zeta = 0;          // (R - N) / sqrt(R), negative under stability

  /// Throws std::invalid_argument on an unstable or degenerate configuration
  /// (requires R < N with N - R >= 1e-9, Lambda > 0, mu in (0,1)).
  static QueueParams make(int n_servers, double arrival_rate, double service_prob);

  /// Utilization R/N.
  double load() const { return offered_load / n_servers; }
};

enum class ArrivalKind { Poisson, GeneralPmf };

/// Per-epoch arrival-count distribution. Poisson is handled analytically;
/// a general law is a finite nonnegative pmf over counts 0..A_max.
class ArrivalModel {
 public:
  static ArrivalModel poisson(double mean);
  /// pmf entries must be >= 0 and sum to 1 within 1e-12.
  static ArrivalModel general(std::vector<double> pmf);

  ArrivalKind kind() const { return kind_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  /// c_A = sigma_A^2 / Lambda + 1. Equals 2 for Poisson.
  double c_a() const { return variance_ / mean_ + 1.0; }
  /// v_A = E[A^3] / Lambda.
  double v_a() const { return raw_moment(3) / mean_; }

  /// Raw moment E[A^k] for k <= 4.
  double raw_moment(int k) const;

  /// pmf over a finite window [first, first + size), entries below `drop`
  /// trimmed; the trimmed mass is returned so the caller can fold it back.
  struct Window {
    int first = 0;
    std::vector<double> p;
    double dropped = 0;
  };
  Window pmf_window(double drop) const;

  /// Consistency check against paired queue parameters (mean must equal
  /// Lambda). Throws std::invalid_argument on mismatch.
  void require_paired(const QueueParams& params) const;

  const std::vector<double>& pmf() const { return pmf_; }

 private:
  ArrivalKind kind_ = ArrivalKind::Poisson;
  double mean_ = 0;
  double variance_ = 0;
  std::vector<double> pmf_;  // general case only
};

/// Piece-wise linear drift: -mu x for x <= -zeta, mu zeta above; continuous
/// at the kink.
double drift_b(double x, const QueueParams& params);

/// State-dependent diffusion coefficient; continuous on R, strictly positive,
/// constant mu(c_A - 1 + Lambda) left of -sqrt(R), quadratic in the middle,
/// constant right of -zeta. Poisson arrivals have c_A = 2.
double diffusion_a(double x, const QueueParams& params, const ArrivalModel& arrivals);

/// Heavy-traffic regime families: spare capacity N - R scales as beta * R^q
/// with q = 1 (QD), 1/2 (QED), 0 (NDS).
enum class Regime { QD, QED, NDS };

double regime_exponent(Regime r);
std::string regime_name(Regime r);
std::optional<Regime> parse_regime(const std::string& name);

/// Scenario-generation recipe: R is scaled by each multiplier, N follows the
/// regime equation, mu = gamma * R^{-s}. gamma defaults to
/// mu_base * R_base^s (inferred from the baseline) unless overridden.
struct RegimeSpec {
  Regime regime = Regime::QED;
  double beta = 0;
  double s_exponent = 0;
  std::vector<double> load_multipliers;
  std::optional<double> gamma;  // override; inferred from base when absent
};

/// Computes beta for `regime` so that the base scenario satisfies
/// N = R + beta * R^q exactly.
double beta_from_base(Regime regime, const QueueParams& base);

/// One QueueParams per multiplier. Throws if a generated scenario is
/// unstable (the diagnostic names the offending multiplier).
std::vector<QueueParams> generate_scenarios(const RegimeSpec& spec, const QueueParams& base);

}  // namespace geoq

#ifndef MIDNIGHT_MODEL_HPP_
#define MIDNIGHT_MODEL_HPP_

#include <stdexcept>
#include <string>

namespace midnight {

/// Thrown when user-supplied parameters violate a model invariant.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical solver cannot meet its stated tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Primitives of the single-pool queue: N servers (beds), Poisson(Lambda)
/// arrivals per day and a geometric length of stay with daily discharge
/// probability mu (mean LOS m = 1/mu days).
class ModelParams {
 public:
  static ModelParams from_mean_los(int n_servers, double daily_arrival_rate,
                                   double mean_los_days);

  int n_servers() const noexcept { return n_servers_; }
  double daily_arrival_rate() const noexcept { return arrival_rate_; }
  double daily_service_prob() const noexcept { return service_prob_; }
  double mean_los() const noexcept { return 1.0 / service_prob_; }
  /// rho = Lambda * m / N.
  double load() const noexcept {
    return arrival_rate_ / (n_servers_ * service_prob_);
  }

  bool operator==(const ModelParams&) const = default;

 private:
  friend ModelParams validate_params(double, double, double);
  ModelParams(int n, double lambda, double mu)
      : n_servers_(n), arrival_rate_(lambda), service_prob_(mu) {}

  int n_servers_;
  double arrival_rate_;
  double service_prob_;
};

/// Checks (N, Lambda, mu) and builds a ModelParams. N must be a positive
/// integer value, Lambda > 0 and mu in (0,1). The error message names the
/// offending field.
ModelParams validate_params(double n_servers, double daily_arrival_rate,
                            double daily_service_prob);

/// Brownian-motion parameters of the centered diffusion approximation.
struct DiffusionParams {
  double drift;            // theta_N = Lambda - N mu
  double variance;         // sigma^2_N = rho N mu (2 - mu)
  double tail_rate;        // gamma = -2 theta / sigma^2
  double gaussian_center;  // theta / mu
  double ou_variance;      // sigma^2 / (2 mu - mu^2)
};

DiffusionParams derive_diffusion_params(const ModelParams& p);

/// Default truncation of the exact chain. Covers ten diffusion standard
/// deviations above N and, when the load is below one, forty mean lengths
/// of the exponential tail.
int default_truncation(const ModelParams& p);

}  // namespace midnight

#endif  // MIDNIGHT_MODEL_HPP_

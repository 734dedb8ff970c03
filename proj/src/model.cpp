#include "midnight/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace midnight {

ModelParams validate_params(double n_servers, double daily_arrival_rate,
                            double daily_service_prob) {
  if (!std::isfinite(n_servers) || n_servers < 1 ||
      n_servers != std::floor(n_servers) || n_servers > 1e7) {
    throw InvalidParameter("n_servers must be a positive integer");
  }
  if (!std::isfinite(daily_arrival_rate) || daily_arrival_rate <= 0) {
    throw InvalidParameter("daily_arrival_rate must be positive and finite");
  }
  if (!(daily_service_prob > 0 && daily_service_prob < 1)) {
    throw InvalidParameter("daily_service_prob must lie in (0,1)");
  }
  return ModelParams(static_cast<int>(n_servers), daily_arrival_rate,
                     daily_service_prob);
}

ModelParams ModelParams::from_mean_los(int n_servers,
                                       double daily_arrival_rate,
                                       double mean_los_days) {
  if (!(mean_los_days > 1)) {
    throw InvalidParameter("mean_los must exceed one day (mu in (0,1))");
  }
  return validate_params(n_servers, daily_arrival_rate, 1.0 / mean_los_days);
}

DiffusionParams derive_diffusion_params(const ModelParams& p) {
  const double n = p.n_servers();
  const double lambda = p.daily_arrival_rate();
  const double mu = p.daily_service_prob();
  const double rho = p.load();

  DiffusionParams d{};
  d.drift = lambda - n * mu;
  d.variance = rho * n * mu * (2.0 - mu);
  // Arrival variance plus Bernoulli discharge variance of the busy beds.
  assert(std::abs(lambda + rho * n * mu * (1.0 - mu) - d.variance) <=
         1e-12 * d.variance);
  d.tail_rate = -2.0 * d.drift / d.variance;
  d.gaussian_center = d.drift / mu;
  d.ou_variance = d.variance / (2.0 * mu - mu * mu);
  return d;
}

int default_truncation(const ModelParams& p) {
  const auto d = derive_diffusion_params(p);
  int extra = static_cast<int>(std::ceil(10.0 * std::sqrt(d.variance)));
  if (d.tail_rate > 0) {
    extra = std::max(extra, static_cast<int>(std::ceil(40.0 / d.tail_rate)));
  }
  return p.n_servers() + extra;
}

}  // namespace midnight

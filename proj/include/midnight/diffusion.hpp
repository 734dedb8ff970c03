#ifndef MIDNIGHT_DIFFUSION_HPP_
#define MIDNIGHT_DIFFUSION_HPP_

#include <cstdint>
#include <vector>

#include "midnight/model.hpp"

namespace midnight {

/// A continuous density on the real line with enough structure for
/// change-of-variable quadrature in its tails.
class Density1D {
 public:
  virtual ~Density1D() = default;

  virtual double pdf(double x) const = 0;
  /// P(X <= x).
  virtual double cdf(double x) const = 0;
  /// P(X > x), accurate deep in the upper tail.
  virtual double survival(double x) const = 0;
  /// x with cdf(x) = u, accurate for small u.
  virtual double quantile(double u) const = 0;
  /// x with survival(x) = t, accurate for small t.
  virtual double upper_quantile(double t) const = 0;

  /// Integral over [a, b).
  double mass(double a, double b) const;
};

class NormalDensity final : public Density1D {
 public:
  NormalDensity(double mean, double variance);

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }

  double pdf(double x) const override;
  double cdf(double x) const override;
  double survival(double x) const override;
  double quantile(double u) const override;
  double upper_quantile(double t) const override;

 private:
  double mean_;
  double variance_;
  double sd_;
};

/// Exponential piece alpha_pos * exp(-gamma x) on [0, inf) joined
/// continuously at zero to a Gaussian piece
/// alpha_neg * exp(-(x - center)^2 / (2 v)) on (-inf, 0).
class PiecewiseDensity final : public Density1D {
 public:
  PiecewiseDensity(double alpha_pos, double alpha_neg, double tail_rate,
                   double gaussian_center, double ou_variance);

  double alpha_pos() const noexcept { return alpha_pos_; }
  double alpha_neg() const noexcept { return alpha_neg_; }
  double tail_rate() const noexcept { return tail_rate_; }
  double gaussian_center() const noexcept { return center_; }
  double ou_variance() const noexcept { return ou_variance_; }

  /// Mass of the Gaussian piece, i.e. cdf(0).
  double negative_mass() const noexcept { return negative_mass_; }
  /// Mass of the exponential piece, alpha_pos / gamma.
  double positive_mass() const noexcept { return alpha_pos_ / tail_rate_; }
  /// Limit from the left at zero.
  double left_limit_at_zero() const;

  double pdf(double x) const override;
  double cdf(double x) const override;
  double survival(double x) const override;
  double quantile(double u) const override;
  double upper_quantile(double t) const override;

 private:
  double alpha_pos_;
  double alpha_neg_;
  double tail_rate_;
  double center_;
  double ou_variance_;
  double sd_;
  double negative_mass_;
};

/// Closed-form proxy for the stationary density of the centered diffusion.
/// Requires drift < 0; throws InvalidParameter otherwise.
PiecewiseDensity proxy_density(const DiffusionParams& d, double service_prob);

/// Stationary law Normal(theta/mu, sigma^2 / (2 mu - mu^2)) of the
/// discrete-time OU recursion X' = (1 - mu) X + Normal(theta, sigma^2).
NormalDensity dou_stationary_density(double drift, double variance,
                                     double service_prob);

/// One-step law of the diffusion approximation: from x the next state is
/// Normal(m(x), sigma^2) with m(x) = x + theta for x >= 0 and
/// (1 - mu) x + theta for x < 0. kPureOu applies the second branch for all x.
struct TransitionKernel {
  enum class Branching { kPushback, kPureOu };

  TransitionKernel(const DiffusionParams& d, double service_prob,
                   Branching branching = Branching::kPushback);

  double drift() const noexcept { return drift_; }
  double variance() const noexcept { return variance_; }
  double sd() const noexcept { return sd_; }
  double service_prob() const noexcept { return service_prob_; }
  Branching branching() const noexcept { return branching_; }

  double mean_next(double x) const noexcept {
    if (x >= 0 && branching_ == Branching::kPushback) return x + drift_;
    return (1.0 - service_prob_) * x + drift_;
  }

 private:
  double drift_;
  double variance_;
  double sd_;
  double service_prob_;
  Branching branching_;
};

double transition_density(const TransitionKernel& kernel, double x, double y);

/// Streams X*_{k+1} = X*_k + dY_k + mu (X*_k)^-, dY_k ~ Normal(theta, sigma^2)
/// drawn from the counter-based stream (seed, k).
class DiffusionSimulator {
 public:
  DiffusionSimulator(const DiffusionParams& d, double service_prob,
                     std::uint64_t seed, double initial = 0.0);

  double advance();
  double state() const noexcept { return state_; }
  long long step() const noexcept { return step_; }
  /// The Gaussian increment used by the most recent advance().
  double last_increment() const noexcept { return last_increment_; }

 private:
  double drift_;
  double sd_;
  double service_prob_;
  std::uint64_t seed_;
  double state_;
  double last_increment_ = 0;
  long long step_ = 0;
};

/// Path X*_0 = initial, ..., X*_steps. mu may be 0 (pure Gaussian walk).
std::vector<double> simulate_diffusion(const DiffusionParams& d,
                                       double service_prob, long long steps,
                                       std::uint64_t seed,
                                       double initial = 0.0);

/// Histogram of X*_k, burn_in <= k < burn_in + steps, over the unit bins
/// [first_center + j - 0.5, first_center + j + 0.5), j = 0..bins-1.
/// Visits outside the bins are dropped; the result is divided by steps.
std::vector<double> diffusion_histogram(const DiffusionParams& d,
                                        double service_prob, long long steps,
                                        long long burn_in, std::uint64_t seed,
                                        double first_center, int bins);

}  // namespace midnight

#endif  // MIDNIGHT_DIFFUSION_HPP_

#include "midnight/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "midnight/numerics.hpp"
#include "midnight/rng.hpp"

namespace midnight {

using numerics::kSqrt2Pi;
using numerics::std_normal_cdf;
using numerics::std_normal_quantile;

double Density1D::mass(double a, double b) const {
  if (!(a < b)) return 0.0;
  // Pick the representation that avoids cancellation.
  if (a >= quantile(0.5)) return survival(a) - survival(b);
  return cdf(b) - cdf(a);
}

NormalDensity::NormalDensity(double mean, double variance)
    : mean_(mean), variance_(variance), sd_(std::sqrt(variance)) {
  if (!(variance > 0) || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw InvalidParameter("normal density needs finite mean and variance > 0");
  }
}

double NormalDensity::pdf(double x) const {
  return numerics::std_normal_pdf((x - mean_) / sd_) / sd_;
}
double NormalDensity::cdf(double x) const {
  return std_normal_cdf((x - mean_) / sd_);
}
double NormalDensity::survival(double x) const {
  return std_normal_cdf((mean_ - x) / sd_);
}
double NormalDensity::quantile(double u) const {
  return mean_ + sd_ * std_normal_quantile(u);
}
double NormalDensity::upper_quantile(double t) const {
  return mean_ - sd_ * std_normal_quantile(t);
}

PiecewiseDensity::PiecewiseDensity(double alpha_pos, double alpha_neg,
                                   double tail_rate, double gaussian_center,
                                   double ou_variance)
    : alpha_pos_(alpha_pos),
      alpha_neg_(alpha_neg),
      tail_rate_(tail_rate),
      center_(gaussian_center),
      ou_variance_(ou_variance),
      sd_(std::sqrt(ou_variance)) {
  if (!(tail_rate > 0) || !(ou_variance > 0) || !(alpha_pos >= 0) ||
      !(alpha_neg > 0)) {
    throw InvalidParameter("piecewise density parameters out of range");
  }
  negative_mass_ = alpha_neg_ * kSqrt2Pi * sd_ * std_normal_cdf(-center_ / sd_);
}

double PiecewiseDensity::left_limit_at_zero() const {
  return alpha_neg_ * std::exp(-center_ * center_ / (2.0 * ou_variance_));
}

double PiecewiseDensity::pdf(double x) const {
  if (x >= 0) return alpha_pos_ * std::exp(-tail_rate_ * x);
  const double z = x - center_;
  return alpha_neg_ * std::exp(-z * z / (2.0 * ou_variance_));
}

double PiecewiseDensity::cdf(double x) const {
  if (x < 0) {
    return alpha_neg_ * kSqrt2Pi * sd_ * std_normal_cdf((x - center_) / sd_);
  }
  return negative_mass_ + positive_mass() * -std::expm1(-tail_rate_ * x);
}

double PiecewiseDensity::survival(double x) const {
  if (x >= 0) return positive_mass() * std::exp(-tail_rate_ * x);
  return positive_mass() + alpha_neg_ * kSqrt2Pi * sd_ *
                               numerics::std_normal_mass((x - center_) / sd_,
                                                         -center_ / sd_);
}

double PiecewiseDensity::quantile(double u) const {
  if (u <= negative_mass_) {
    return center_ + sd_ * std_normal_quantile(u / (alpha_neg_ * kSqrt2Pi * sd_));
  }
  return std::max(0.0, -std::log((1.0 - u) / positive_mass()) / tail_rate_);
}

double PiecewiseDensity::upper_quantile(double t) const {
  if (t <= positive_mass()) {
    return -std::log(t / positive_mass()) / tail_rate_;
  }
  const double u = std::min(1.0 - t, negative_mass_);
  return std::min(
      0.0, center_ + sd_ * std_normal_quantile(u / (alpha_neg_ * kSqrt2Pi * sd_)));
}

PiecewiseDensity proxy_density(const DiffusionParams& d, double service_prob) {
  if (!(d.drift < 0) || !(d.tail_rate > 0)) {
    throw InvalidParameter("proxy density not normalizable (γ ≤ 0)");
  }
  if (!(service_prob > 0 && service_prob < 1)) {
    throw InvalidParameter("service probability must lie in (0,1)");
  }
  const double c = d.gaussian_center;
  const double v = d.ou_variance;
  // alpha_pos = alpha_neg * ratio makes the two pieces meet at zero.
  const double ratio = std::exp(-c * c / (2.0 * v));
  const double gaussian_mass = kSqrt2Pi * std::sqrt(v) *
                               std_normal_cdf(-c / std::sqrt(v));
  const double alpha_neg = 1.0 / (ratio / d.tail_rate + gaussian_mass);
  const double alpha_pos = alpha_neg * ratio;
  return PiecewiseDensity(alpha_pos, alpha_neg, d.tail_rate, c, v);
}

NormalDensity dou_stationary_density(double drift, double variance,
                                     double service_prob) {
  if (!(service_prob > 0 && service_prob < 1)) {
    throw InvalidParameter("service probability must lie in (0,1)");
  }
  if (!(variance > 0)) throw InvalidParameter("variance must be positive");
  return NormalDensity(drift / service_prob,
                       variance / (2.0 * service_prob -
                                   service_prob * service_prob));
}

TransitionKernel::TransitionKernel(const DiffusionParams& d,
                                   double service_prob, Branching branching)
    : drift_(d.drift),
      variance_(d.variance),
      sd_(std::sqrt(d.variance)),
      service_prob_(service_prob),
      branching_(branching) {
  if (!(d.variance > 0)) throw InvalidParameter("variance must be positive");
  if (!(service_prob >= 0 && service_prob <= 1)) {
    throw InvalidParameter("service probability must lie in [0,1]");
  }
}

double transition_density(const TransitionKernel& kernel, double x, double y) {
  return numerics::std_normal_pdf((y - kernel.mean_next(x)) / kernel.sd()) /
         kernel.sd();
}

DiffusionSimulator::DiffusionSimulator(const DiffusionParams& d,
                                       double service_prob, std::uint64_t seed,
                                       double initial)
    : drift_(d.drift),
      sd_(std::sqrt(d.variance)),
      service_prob_(service_prob),
      seed_(seed),
      state_(initial) {
  if (!(service_prob >= 0 && service_prob <= 1)) {
    throw InvalidParameter("service probability must lie in [0,1]");
  }
}

double DiffusionSimulator::advance() {
  CounterRng rng(seed_, static_cast<std::uint64_t>(step_));
  last_increment_ = drift_ + sd_ * rng.normal();
  const double pushback = state_ < 0 ? -service_prob_ * state_ : 0.0;
  state_ += last_increment_ + pushback;
  ++step_;
  return state_;
}

std::vector<double> simulate_diffusion(const DiffusionParams& d,
                                       double service_prob, long long steps,
                                       std::uint64_t seed, double initial) {
  if (steps < 1) throw InvalidParameter("steps must be at least 1");
  DiffusionSimulator sim(d, service_prob, seed, initial);
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(sim.state());
  for (long long k = 0; k < steps; ++k) path.push_back(sim.advance());
  return path;
}

std::vector<double> diffusion_histogram(const DiffusionParams& d,
                                        double service_prob, long long steps,
                                        long long burn_in, std::uint64_t seed,
                                        double first_center, int bins) {
  if (steps < 1 || burn_in < 0 || bins < 1) {
    throw InvalidParameter("histogram needs steps >= 1, burn_in >= 0, bins >= 1");
  }
  DiffusionSimulator sim(d, service_prob, seed);
  for (long long k = 0; k < burn_in; ++k) sim.advance();
  std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
  const double lower = first_center - 0.5;
  for (long long k = 0; k < steps; ++k) {
    const double offset = std::floor(sim.state() - lower);
    if (offset >= 0 && offset < bins) hist[static_cast<std::size_t>(offset)] += 1;
    sim.advance();
  }
  for (double& h : hist) h /= static_cast<double>(steps);
  return hist;
}

}  // namespace midnight

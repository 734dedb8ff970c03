#include "midnight/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace midnight::numerics {

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / kSqrt2Pi;
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / kSqrt2);
}

double std_normal_mass(double a, double b) {
  if (a > 0) {
    return 0.5 * (std::erfc(a / kSqrt2) - std::erfc(b / kSqrt2));
  }
  if (b < 0) {
    return 0.5 * (std::erfc(-b / kSqrt2) - std::erfc(-a / kSqrt2));
  }
  return 1.0 - 0.5 * std::erfc(b / kSqrt2) - 0.5 * std::erfc(-a / kSqrt2);
}

double std_normal_quantile(double u) {
  if (!(u > 0 && u < 1)) {
    if (u == 0) return -INFINITY;
    if (u == 1) return INFINITY;
    throw std::domain_error("std_normal_quantile: argument outside [0,1]");
  }
  // Acklam's rational approximation, then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  double x;
  if (u < kLow) {
    const double q = std::sqrt(-2 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (u <= 1 - kLow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // Refine against whichever tail is representable.
  for (int it = 0; it < 2; ++it) {
    double e;
    if (u < 0.5) {
      e = std_normal_cdf(x) - u;
    } else {
      e = (1 - u) - 0.5 * std::erfc(x / kSqrt2);
    }
    const double step = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= step / (1 + 0.5 * x * step);
  }
  return x;
}

double normal_pdf(double x, double mean, double variance) {
  const double sd = std::sqrt(variance);
  return std_normal_pdf((x - mean) / sd) / sd;
}

namespace {

// Fills terms[lo..hi] from the log-mode value using the ratio recurrence
// term(k+1) = term(k) * ratio(k), in both directions.
template <class Ratio>
void fill_from_mode(std::vector<double>& terms, std::size_t mode,
                    double log_mode, Ratio&& ratio) {
  terms[mode] = std::exp(log_mode);
  for (std::size_t k = mode; k + 1 < terms.size(); ++k) {
    terms[k + 1] = terms[k] * ratio(k);
  }
  for (std::size_t k = mode; k > 0; --k) {
    terms[k - 1] = terms[k] / ratio(k - 1);
  }
}

}  // namespace

std::vector<double> poisson_pmf(double rate, std::size_t count) {
  if (!(rate >= 0)) throw std::domain_error("poisson_pmf: negative rate");
  if (rate == 0) {
    std::vector<double> out(count, 0.0);
    if (count > 0) out[0] = 1.0;
    return out;
  }
  const auto span = static_cast<std::size_t>(
      std::ceil(rate + 40.0 * std::sqrt(rate) + 60.0));
  std::vector<double> terms(std::max(count, span), 0.0);
  const auto mode = static_cast<std::size_t>(std::floor(rate));
  const double md = static_cast<double>(mode);
  const double log_mode = md * std::log(rate) - rate - std::lgamma(md + 1);
  fill_from_mode(terms, mode, log_mode, [rate](std::size_t k) {
    return rate / static_cast<double>(k + 1);
  });
  const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
  terms.resize(count);
  for (double& t : terms) t /= total;
  return terms;
}

std::vector<double> binomial_pmf(int trials, double prob) {
  if (trials < 0 || !(prob >= 0 && prob <= 1)) {
    throw std::domain_error("binomial_pmf: invalid arguments");
  }
  std::vector<double> terms(static_cast<std::size_t>(trials) + 1, 0.0);
  if (prob == 0 || prob == 1 || trials == 0) {
    terms[prob == 1 ? trials : 0] = 1.0;
    return terms;
  }
  const double n = trials;
  const auto mode = static_cast<std::size_t>(
      std::min(n, std::floor((n + 1) * prob)));
  const double md = static_cast<double>(mode);
  const double log_mode = std::lgamma(n + 1) - std::lgamma(md + 1) -
                          std::lgamma(n - md + 1) + md * std::log(prob) +
                          (n - md) * std::log1p(-prob);
  const double odds = prob / (1 - prob);
  fill_from_mode(terms, mode, log_mode, [n, odds](std::size_t k) {
    const double kd = static_cast<double>(k);
    return (n - kd) / (kd + 1) * odds;
  });
  const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
  for (double& t : terms) t /= total;
  return terms;
}

namespace {

GaussLegendreRule compute_gauss_legendre(int order) {
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (x * p0 - p1) / (x * x - 1);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    const double w = 2 / ((1 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 1) throw std::domain_error("gauss_legendre: order < 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) {
    slot = std::make_unique<GaussLegendreRule>(compute_gauss_legendre(order));
  }
  return *slot;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("total_variation: lattice size mismatch");
  }
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

}  // namespace midnight::numerics

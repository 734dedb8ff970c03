#ifndef MIDNIGHT_NUMERICS_HPP_
#define MIDNIGHT_NUMERICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace midnight::numerics {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal density.
double std_normal_pdf(double z);
/// Standard normal CDF, accurate in both tails.
double std_normal_cdf(double z);
/// Phi(b) - Phi(a) for a <= b without cancellation in the upper tail.
double std_normal_mass(double a, double b);
/// Inverse of the standard normal CDF on (0,1).
double std_normal_quantile(double u);

/// Density of Normal(mean, variance) at x.
double normal_pdf(double x, double mean, double variance);

/// Poisson(rate) pmf on {0, ..., count-1}, computed in log space.
std::vector<double> poisson_pmf(double rate, std::size_t count);
/// Binomial(trials, prob) pmf on {0, ..., trials}, computed in log space.
std::vector<double> binomial_pmf(int trials, double prob);

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on the Legendre recurrence.
/// Rules are cached per order; the returned reference stays valid.
const GaussLegendreRule& gauss_legendre(int order);

/// Integral of f over [a,b] with one Gauss-Legendre panel.
template <class F>
double integrate_panel(const GaussLegendreRule& rule, double a, double b,
                       F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

/// Half the L1 distance between two pmfs on the same lattice.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace midnight::numerics

#endif  // MIDNIGHT_NUMERICS_HPP_

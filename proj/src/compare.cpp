#include "midnight/compare.hpp"

#include <cmath>
#include <numeric>

#include "midnight/exact_chain.hpp"
#include "midnight/numerics.hpp"

namespace midnight {

std::vector<double> bin_to_lattice(const Density1D& centered, int n_servers,
                                   int max_state) {
  std::vector<double> out(static_cast<std::size_t>(max_state) + 1);
  for (int k = 0; k <= max_state; ++k) {
    const double x = static_cast<double>(k - n_servers);
    out[k] = centered.mass(x - 0.5, x + 0.5);
  }
  return out;
}

std::vector<double> bin_to_lattice(const RatioReconstruction& centered,
                                   int n_servers, int max_state) {
  return centered.bin_masses(-static_cast<double>(n_servers), max_state + 1);
}

std::vector<double> normalized(std::vector<double> pmf) {
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  if (!(total > 0)) throw InvalidParameter("cannot normalize zero mass");
  for (double& v : pmf) v /= total;
  return pmf;
}

LatticeSummary summarize(std::string name, std::span<const double> pmf,
                         int n_servers) {
  double mean = 0;
  double wait = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    mean += static_cast<double>(k) * pmf[k];
    if (static_cast<int>(k) > n_servers) wait += pmf[k];
  }
  double var = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    var += (k - mean) * (k - mean) * pmf[k];
  }
  return {std::move(name), mean, std::sqrt(var), wait};
}

ComparisonReport compare_methods(const ModelParams& p,
                                 const CompareOptions& options) {
  const int n = p.n_servers();
  const int truncation = options.truncation.value_or(default_truncation(p));
  const auto kernel = build_kernel(p, truncation);
  auto exact = stationary_pmf(kernel, options.tol).mass;

  const auto d = derive_diffusion_params(p);
  const auto proxy = proxy_density(d, p.daily_service_prob());
  auto formula = normalized(bin_to_lattice(proxy, n, truncation));

  const auto projected = project_stationary_density(p, options.projection);
  auto projection =
      normalized(bin_to_lattice(projected.reconstruction, n, truncation));

  ComparisonReport report{p, d, truncation, std::move(exact),
                          std::move(formula), std::move(projection), {},
                          0, 0, 0};
  report.methods = {summarize("exact", report.exact, n),
                    summarize("formula", report.formula, n),
                    summarize("projection", report.projection, n)};
  report.tv_formula_vs_exact =
      numerics::total_variation(report.formula, report.exact);
  report.tv_projection_vs_exact =
      numerics::total_variation(report.projection, report.exact);
  report.tv_projection_vs_formula =
      numerics::total_variation(report.projection, report.formula);
  return report;
}

}  // namespace midnight

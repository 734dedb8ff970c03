#ifndef MIDNIGHT_COMPARE_HPP_
#define MIDNIGHT_COMPARE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "midnight/diffusion.hpp"
#include "midnight/model.hpp"
#include "midnight/projection.hpp"

namespace midnight {

/// Mass of a centered density on the count lattice: count k receives
/// [k - N - 0.5, k - N + 0.5), for k = 0..max_state.
std::vector<double> bin_to_lattice(const Density1D& centered, int n_servers,
                                   int max_state);
std::vector<double> bin_to_lattice(const RatioReconstruction& centered,
                                   int n_servers, int max_state);

/// Rescales to unit mass; throws if the mass is not positive.
std::vector<double> normalized(std::vector<double> pmf);

struct LatticeSummary {
  std::string name;
  double mean;
  double sd;
  double p_wait;  // P(X > N)
};

LatticeSummary summarize(std::string name, std::span<const double> pmf,
                         int n_servers);

struct CompareOptions {
  std::optional<int> truncation;
  double tol = 1e-12;
  ProjectionOptions projection;
};

/// Exact chain, proxy formula and projection aligned on {0, ..., K_max}.
struct ComparisonReport {
  ModelParams params;
  DiffusionParams diffusion;
  int truncation;
  std::vector<double> exact;
  std::vector<double> formula;
  std::vector<double> projection;
  std::vector<LatticeSummary> methods;
  double tv_formula_vs_exact;
  double tv_projection_vs_exact;
  double tv_projection_vs_formula;
};

ComparisonReport compare_methods(const ModelParams& p,
                                 const CompareOptions& options = {});

}  // namespace midnight

#endif  // MIDNIGHT_COMPARE_HPP_

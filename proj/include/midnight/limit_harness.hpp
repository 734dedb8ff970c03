#ifndef MIDNIGHT_LIMIT_HARNESS_HPP_
#define MIDNIGHT_LIMIT_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace midnight {

/// Empirical check of the many-server diffusion limit. For each N the arrival
/// rate is set to N mu (1 - beta*/sqrt N), so that sqrt N (1 - rho^N) = beta*.
struct LimitHarnessConfig {
  std::vector<int> system_sizes;  // strictly increasing, each >= 2
  int horizon = 10;  // K days; 0 is the degenerate initial-condition check
  int replications = 100000;
  double service_prob = 1.0 / 5.3;
  double beta_star = 1.0;
  /// Limit of Lambda^N / N. Forced to equal mu by the QED coupling; left
  /// empty it defaults to mu.
  std::optional<double> lambda_star;
  std::uint64_t seed = 1;
};

/// Lambda^N = N mu (1 - beta* / sqrt N).
double qed_arrival_rate(int n_servers, double service_prob, double beta_star);

struct LimitEntry {
  int n;
  double arrival_rate;
  double ks_distance;
  double scaled_mean;  // sample mean of (X_K - N) / sqrt N
  double scaled_sd;
  int replications;
  int horizon;
};

struct LimitReport {
  std::vector<LimitEntry> entries;
  double limit_mean;  // sample mean of the simulated X^{lim}_K
  double limit_sd;
  std::vector<std::string> warnings;

  bool ks_strictly_decreasing() const;
};

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
/// Handles ties (the pre-limit sample lives on a lattice).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Samples (X^N_K - N)/sqrt N over independent replications started at
/// X_0 = N, using the exact queue simulator.
std::vector<double> sample_scaled_prelimit(int n_servers, double service_prob,
                                           double beta_star, int horizon,
                                           int replications, std::uint64_t seed);

/// Samples X_K of the limit recursion X_{k+1} = X_k + dY + mu (X_k)^-,
/// X_0 = 0, dY ~ Normal(-mu beta*, Lambda* + mu (1 - mu)).
std::vector<double> sample_limit(double service_prob, double beta_star,
                                 double lambda_star, int horizon,
                                 int replications, std::uint64_t seed);

LimitReport run_limit_harness(const LimitHarnessConfig& cfg);

}  // namespace midnight

#endif  // MIDNIGHT_LIMIT_HARNESS_HPP_

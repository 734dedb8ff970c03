#ifndef MIDNIGHT_EXACT_CHAIN_HPP_
#define MIDNIGHT_EXACT_CHAIN_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "midnight/model.hpp"

namespace midnight {

/// One-day transition matrix of the midnight count on {0, ..., K_max}.
/// Row x is the law of x - Binomial(min(x,N), mu) + Poisson(Lambda); mass
/// that would land above K_max is folded into the K_max entry.
struct ChainKernel {
  using Matrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int truncation_level;
  Matrix rows;
  ModelParams params;

  int size() const noexcept { return truncation_level + 1; }
};

ChainKernel build_kernel(const ModelParams& p, int truncation);

struct StationaryPMF {
  std::vector<double> mass;  // indexed by state 0..K_max
  ModelParams params;
  double residual = 0;  // ||pi P - pi||_1 at return
  int iterations = 0;
  bool direct_solve = false;

  int truncation_level() const noexcept {
    return static_cast<int>(mass.size()) - 1;
  }
  double mean() const;
  double sd() const;
  /// E[min(X, N)], the mean number of busy servers.
  double mean_busy() const;
  /// P(X > N).
  double prob_waiting() const;
};

/// ||pi P - pi||_1.
double stationarity_residual(const ChainKernel& kernel,
                             std::span<const double> pi);

/// Power iteration with L1 residual stopping. Falls back to a direct solve of
/// (P^T - I) pi = 0 with a normalization row when the iteration stalls or
/// runs out of iterations; throws SolverError if the tolerance is still
/// missed.
StationaryPMF stationary_pmf(const ChainKernel& kernel, double tol = 1e-12,
                             int max_iters = 200000);

/// Inverse-CDF samplers for the daily Poisson arrivals and the Binomial
/// discharges of every possible busy-server count.
class DailyLaws {
 public:
  explicit DailyLaws(const ModelParams& p);

  int sample_arrivals(double u) const;
  int sample_departures(int busy, double u) const;

 private:
  std::vector<double> arrival_cdf_;
  std::vector<std::vector<double>> departure_cdf_;
};

/// Streams the midnight count one day at a time. Day k draws D_k then A_k
/// from the counter-based stream (seed, k), so the path depends only on the
/// seed, the parameters and the initial state.
class ChainSimulator {
 public:
  ChainSimulator(const DailyLaws& laws, const ModelParams& p,
                 std::uint64_t seed, long long initial);

  struct Day {
    long long departures;
    long long arrivals;
  };

  Day advance();
  long long state() const noexcept { return state_; }
  long long day() const noexcept { return day_; }

 private:
  const DailyLaws* laws_;
  int n_servers_;
  std::uint64_t seed_;
  long long state_;
  long long day_ = 0;
};

struct SimulatedPath {
  std::uint64_t seed;
  std::vector<long long> counts;      // X_0, ..., X_horizon
  std::vector<long long> arrivals;    // A_0, ..., A_{horizon-1}
  std::vector<long long> departures;  // D_0, ..., D_{horizon-1}
  ModelParams params;
};

/// Simulates `horizon` days from `initial` (N when negative).
SimulatedPath simulate_path(const ModelParams& p, long long horizon,
                            std::uint64_t seed, long long initial = -1);

/// Relative frequencies of X_k for k >= burn_in, on {0, ..., max_state}.
/// Visits above max_state are counted in the last cell.
std::vector<double> empirical_pmf(std::span<const long long> counts,
                                  std::size_t burn_in, int max_state);

/// Same histogram as empirical_pmf(simulate_path(...).counts, ...) without
/// storing the path: X_k for burn_in <= k < burn_in + steps.
std::vector<double> simulate_occupancy(const ModelParams& p, long long steps,
                                       long long burn_in, std::uint64_t seed,
                                       int max_state, long long initial = -1);

}  // namespace midnight

#endif  // MIDNIGHT_EXACT_CHAIN_HPP_

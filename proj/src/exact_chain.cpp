#include "midnight/exact_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "midnight/numerics.hpp"
#include "midnight/rng.hpp"

namespace midnight {

ChainKernel build_kernel(const ModelParams& p, int truncation) {
  const int n = p.n_servers();
  if (truncation < n) {
    throw InvalidParameter("truncation below server count");
  }
  const int size = truncation + 1;
  const double lambda = p.daily_arrival_rate();
  const auto extended = static_cast<std::size_t>(size) +
                        static_cast<std::size_t>(std::ceil(
                            lambda + 40.0 * std::sqrt(lambda) + 60.0));
  const auto arrivals = numerics::poisson_pmf(lambda, extended);
  // survival[j] = P(A >= j), accumulated from the far tail inward.
  std::vector<double> survival(extended + 1, 0.0);
  for (std::size_t j = extended; j-- > 0;) {
    survival[j] = survival[j + 1] + arrivals[j];
  }

  ChainKernel kernel{truncation, ChainKernel::Matrix::Zero(size, size), p};
  std::vector<std::vector<double>> departures(n + 1);
  for (int z = 0; z <= n; ++z) {
    departures[z] = numerics::binomial_pmf(z, p.daily_service_prob());
  }

  for (int x = 0; x < size; ++x) {
    auto row = kernel.rows.row(x);
    const auto& dep = departures[std::min(x, n)];
    for (std::size_t d = 0; d < dep.size(); ++d) {
      const double pd = dep[d];
      if (pd == 0.0) continue;
      const int base = x - static_cast<int>(d);
      for (int y = base; y < truncation; ++y) {
        row(y) += pd * arrivals[y - base];
      }
      row(truncation) += pd * survival[truncation - base];
    }
  }
  return kernel;
}

double stationarity_residual(const ChainKernel& kernel,
                             std::span<const double> pi) {
  const Eigen::Map<const Eigen::RowVectorXd> v(pi.data(),
                                               static_cast<Eigen::Index>(pi.size()));
  const Eigen::RowVectorXd next = v * kernel.rows;
  return (next - v).lpNorm<1>();
}

namespace {

std::vector<double> to_vector(const Eigen::RowVectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// Solves (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
Eigen::RowVectorXd direct_solve(const ChainKernel& kernel) {
  const Eigen::Index size = kernel.size();
  Eigen::MatrixXd a = kernel.rows.transpose();
  a.diagonal().array() -= 1.0;
  a.row(size - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size);
  b(size - 1) = 1.0;
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  x = x.cwiseMax(0.0);
  x /= x.sum();
  return x.transpose();
}

}  // namespace

StationaryPMF stationary_pmf(const ChainKernel& kernel, double tol,
                             int max_iters) {
  if (!(tol > 0)) throw InvalidParameter("tol must be positive");
  if (max_iters < 1) throw InvalidParameter("max_iters must be positive");

  const Eigen::Index size = kernel.size();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(size, 1.0 / size);
  Eigen::RowVectorXd next(size);

  constexpr int kStallWindow = 5000;
  double window_start = INFINITY;
  double residual = INFINITY;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    next.noalias() = pi * kernel.rows;
    residual = (next - pi).lpNorm<1>();
    if (residual <= tol) {
      return {to_vector(pi), kernel.params, residual, iter, false};
    }
    if (iter % kStallWindow == 0) {
      if (residual > 0.5 * window_start) break;
      window_start = residual;
    }
    pi = next / next.sum();
  }

  // Direct solve, then polish with a few sweeps.
  pi = direct_solve(kernel);
  for (int polish = 0; polish < 2000; ++polish) {
    next.noalias() = pi * kernel.rows;
    residual = (next - pi).lpNorm<1>();
    if (residual <= tol) {
      return {to_vector(pi), kernel.params, residual, iter + polish, true};
    }
    pi = next / next.sum();
  }
  throw SolverError("stationary solve did not converge; residual " +
                        std::to_string(residual),
                    residual);
}

double StationaryPMF::mean() const {
  double m = 0;
  for (std::size_t k = 0; k < mass.size(); ++k) m += k * mass[k];
  return m;
}

double StationaryPMF::sd() const {
  const double m = mean();
  double v = 0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    v += (k - m) * (k - m) * mass[k];
  }
  return std::sqrt(v);
}

double StationaryPMF::mean_busy() const {
  const auto n = static_cast<std::size_t>(params.n_servers());
  double m = 0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    m += static_cast<double>(std::min(k, n)) * mass[k];
  }
  return m;
}

double StationaryPMF::prob_waiting() const {
  const auto n = static_cast<std::size_t>(params.n_servers());
  double s = 0;
  for (std::size_t k = n + 1; k < mass.size(); ++k) s += mass[k];
  return s;
}

namespace {

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  return cdf;
}

int invert(const std::vector<double>& cdf, double u) {
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return static_cast<int>(cdf.size()) - 1;
  return static_cast<int>(it - cdf.begin());
}

}  // namespace

DailyLaws::DailyLaws(const ModelParams& p) {
  const double lambda = p.daily_arrival_rate();
  arrival_cdf_ = cumulative(numerics::poisson_pmf(
      lambda, static_cast<std::size_t>(
                  std::ceil(lambda + 40.0 * std::sqrt(lambda) + 60.0))));
  departure_cdf_.resize(p.n_servers() + 1);
  for (int z = 0; z <= p.n_servers(); ++z) {
    departure_cdf_[z] =
        cumulative(numerics::binomial_pmf(z, p.daily_service_prob()));
  }
}

int DailyLaws::sample_arrivals(double u) const {
  return invert(arrival_cdf_, u);
}

int DailyLaws::sample_departures(int busy, double u) const {
  return invert(departure_cdf_.at(busy), u);
}

ChainSimulator::ChainSimulator(const DailyLaws& laws, const ModelParams& p,
                               std::uint64_t seed, long long initial)
    : laws_(&laws),
      n_servers_(p.n_servers()),
      seed_(seed),
      state_(initial < 0 ? p.n_servers() : initial) {}

ChainSimulator::Day ChainSimulator::advance() {
  CounterRng rng(seed_, static_cast<std::uint64_t>(day_));
  const int busy = static_cast<int>(std::min<long long>(state_, n_servers_));
  const long long d = laws_->sample_departures(busy, rng.uniform());
  const long long a = laws_->sample_arrivals(rng.uniform());
  state_ += a - d;
  ++day_;
  return {d, a};
}

SimulatedPath simulate_path(const ModelParams& p, long long horizon,
                            std::uint64_t seed, long long initial) {
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  const DailyLaws laws(p);
  ChainSimulator sim(laws, p, seed, initial);
  SimulatedPath path{seed, {}, {}, {}, p};
  const auto len = static_cast<std::size_t>(horizon);
  path.counts.reserve(len + 1);
  path.arrivals.reserve(len);
  path.departures.reserve(len);
  path.counts.push_back(sim.state());
  for (long long k = 0; k < horizon; ++k) {
    const auto day = sim.advance();
    path.departures.push_back(day.departures);
    path.arrivals.push_back(day.arrivals);
    path.counts.push_back(sim.state());
  }
  return path;
}

std::vector<double> empirical_pmf(std::span<const long long> counts,
                                  std::size_t burn_in, int max_state) {
  if (max_state < 0) throw InvalidParameter("max_state must be nonnegative");
  if (burn_in >= counts.size()) {
    throw InvalidParameter("burn_in leaves no samples");
  }
  std::vector<double> pmf(static_cast<std::size_t>(max_state) + 1, 0.0);
  for (std::size_t k = burn_in; k < counts.size(); ++k) {
    pmf[static_cast<std::size_t>(std::min<long long>(counts[k], max_state))] += 1;
  }
  const double total = static_cast<double>(counts.size() - burn_in);
  for (double& v : pmf) v /= total;
  return pmf;
}

std::vector<double> simulate_occupancy(const ModelParams& p, long long steps,
                                       long long burn_in, std::uint64_t seed,
                                       int max_state, long long initial) {
  if (steps < 1) throw InvalidParameter("steps must be at least 1");
  if (burn_in < 0) throw InvalidParameter("burn_in must be nonnegative");
  if (max_state < 0) throw InvalidParameter("max_state must be nonnegative");
  const DailyLaws laws(p);
  ChainSimulator sim(laws, p, seed, initial);
  for (long long k = 0; k < burn_in; ++k) sim.advance();
  std::vector<double> pmf(static_cast<std::size_t>(max_state) + 1, 0.0);
  for (long long k = 0; k < steps; ++k) {
    pmf[static_cast<std::size_t>(std::min<long long>(sim.state(), max_state))] += 1;
    sim.advance();
  }
  for (double& v : pmf) v /= static_cast<double>(steps);
  return pmf;
}

}  // namespace midnight

#include "midnight/limit_harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "midnight/exact_chain.hpp"
#include "midnight/model.hpp"
#include "midnight/rng.hpp"

namespace midnight {

namespace {

constexpr std::uint64_t kLimitStream = 0x4C494D4954ULL;

// Runs body(i) for i in [0, count) across hardware threads. Each index writes
// only its own output slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(int count, Body&& body) {
  const int workers = std::clamp<int>(
      static_cast<int>(std::thread::hardware_concurrency()), 1, 16);
  if (workers == 1 || count < 4096) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::pair<double, double> mean_sd(std::span<const double> xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= std::max<double>(1.0, static_cast<double>(xs.size()) - 1.0);
  return {m, std::sqrt(v)};
}

}  // namespace

double qed_arrival_rate(int n_servers, double service_prob, double beta_star) {
  const double n = n_servers;
  return n * service_prob * (1.0 - beta_star / std::sqrt(n));
}

bool LimitReport::ks_strictly_decreasing() const {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i].ks_distance < entries[i - 1].ks_distance)) return false;
  }
  return true;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw InvalidParameter("ks_two_sample needs two nonempty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    sup = std::max(sup, std::abs(i / na - j / nb));
  }
  return sup;
}

std::vector<double> sample_scaled_prelimit(int n_servers, double service_prob,
                                           double beta_star, int horizon,
                                           int replications,
                                           std::uint64_t seed) {
  const auto p = validate_params(
      n_servers, qed_arrival_rate(n_servers, service_prob, beta_star),
      service_prob);
  const DailyLaws laws(p);
  const double scale = std::sqrt(static_cast<double>(n_servers));
  const std::uint64_t system_seed =
      derive_seed(seed, static_cast<std::uint64_t>(n_servers));
  std::vector<double> out(static_cast<std::size_t>(replications));
  parallel_for(replications, [&](int r) {
    ChainSimulator sim(laws, p, derive_seed(system_seed, r), n_servers);
    for (int k = 0; k < horizon; ++k) sim.advance();
    out[r] = static_cast<double>(sim.state() - n_servers) / scale;
  });
  return out;
}

std::vector<double> sample_limit(double service_prob, double beta_star,
                                 double lambda_star, int horizon,
                                 int replications, std::uint64_t seed) {
  const double mu = service_prob;
  const double drift = -mu * beta_star;
  const double sd = std::sqrt(lambda_star + mu * (1.0 - mu));
  const std::uint64_t limit_seed = derive_seed(seed, kLimitStream);
  std::vector<double> out(static_cast<std::size_t>(replications));
  parallel_for(replications, [&](int r) {
    CounterRng rng(limit_seed, static_cast<std::uint64_t>(r));
    double x = 0;
    for (int k = 0; k < horizon; ++k) {
      const double pushback = x < 0 ? -mu * x : 0.0;
      x += drift + sd * rng.normal() + pushback;
    }
    out[r] = x;
  });
  return out;
}

LimitReport run_limit_harness(const LimitHarnessConfig& cfg) {
  if (cfg.system_sizes.empty()) {
    throw InvalidParameter("system_sizes must not be empty");
  }
  const auto& sizes = cfg.system_sizes;
  if (std::adjacent_find(sizes.begin(), sizes.end(), std::greater_equal<>()) !=
      sizes.end()) {
    throw InvalidParameter("system_sizes must be strictly increasing");
  }
  if (sizes.front() < 2) {
    throw InvalidParameter("system_sizes must be at least 2");
  }
  if (cfg.horizon < 0) throw InvalidParameter("horizon must be nonnegative");
  if (cfg.replications < 1) {
    throw InvalidParameter("replications must be positive");
  }
  if (!(cfg.service_prob > 0 && cfg.service_prob < 1)) {
    throw InvalidParameter("service_prob must lie in (0,1)");
  }
  if (!(cfg.beta_star > 0)) throw InvalidParameter("beta_star must be positive");
  if (!(cfg.beta_star < std::sqrt(static_cast<double>(sizes.front())))) {
    throw InvalidParameter("beta_star must be below sqrt(N) for every N");
  }
  const double lambda_star = cfg.lambda_star.value_or(cfg.service_prob);
  if (std::abs(lambda_star - cfg.service_prob) > 1e-12 * cfg.service_prob) {
    throw InvalidParameter(
        "lambda_star must equal mu under the QED arrival coupling");
  }

  LimitReport report;
  if (cfg.replications < 1000) {
    report.warnings.push_back("replications < 1000: KS noise dominates");
  }
  const auto limit = sample_limit(cfg.service_prob, cfg.beta_star, lambda_star,
                                  cfg.horizon, cfg.replications, cfg.seed);
  std::tie(report.limit_mean, report.limit_sd) = mean_sd(limit);

  for (int n : cfg.system_sizes) {
    const auto scaled =
        sample_scaled_prelimit(n, cfg.service_prob, cfg.beta_star, cfg.horizon,
                               cfg.replications, cfg.seed);
    const auto [m, s] = mean_sd(scaled);
    report.entries.push_back(
        {n, qed_arrival_rate(n, cfg.service_prob, cfg.beta_star),
         ks_two_sample(scaled, limit), m, s, cfg.replications, cfg.horizon});
  }
  return report;
}

}  // namespace midnight

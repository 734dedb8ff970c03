#include <doctest.h>

#include <cmath>

#include "midnight/limit_harness.hpp"
#include "midnight/model.hpp"

using namespace midnight;

namespace {

// Brute-force two-sample KS: evaluate both ECDFs at every sample point.
double ks_brute(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ecdf = [](const std::vector<double>& s, double x) {
    double c = 0;
    for (double v : s) c += v <= x;
    return c / static_cast<double>(s.size());
  };
  double sup = 0;
  for (const auto* s : {&a, &b}) {
    for (double x : *s) sup = std::max(sup, std::abs(ecdf(a, x) - ecdf(b, x)));
  }
  return sup;
}

}  // namespace

TEST_CASE("QED arrival rate meets the heavy-traffic condition exactly") {
  for (int n : {2, 25, 100, 400, 10000}) {
    const double mu = 1 / 5.3;
    const double lambda = qed_arrival_rate(n, mu, 1.0);
    const double rho = lambda / (n * mu);
    CHECK(std::sqrt(static_cast<double>(n)) * (1 - rho) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("two-sample KS handles ties and matches brute force") {
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({0, 0, 0}, {1, 1}) == 1.0);
  CHECK(ks_two_sample({1, 1, 2, 2}, {1, 2, 2, 2}) == doctest::Approx(0.25));
  const std::vector<double> a{0.5, 1, 1, 1, 2, 3.5, 4, 4};
  const std::vector<double> b{1, 1, 2, 2, 2, 3, 5};
  CHECK(ks_two_sample(a, b) == doctest::Approx(ks_brute(a, b)));
  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), InvalidParameter);
}

TEST_CASE("horizon zero is degenerate at the initial condition") {
  LimitHarnessConfig cfg;
  cfg.system_sizes = {25, 100};
  cfg.horizon = 0;
  cfg.replications = 2000;
  const auto report = run_limit_harness(cfg);
  for (const auto& e : report.entries) {
    CHECK(e.ks_distance == 0.0);
    CHECK(e.scaled_mean == 0.0);
  }
  CHECK(report.limit_mean == 0.0);
}

TEST_CASE("one-step mean of the scaled queue is -mu beta*") {
  const double mu = 1 / 5.3;
  const int reps = 400000;
  const auto xs = sample_scaled_prelimit(400, mu, 1.0, 1, reps, 9);
  double m = 0, v = 0;
  for (double x : xs) m += x;
  m /= reps;
  for (double x : xs) v += (x - m) * (x - m);
  const double se = std::sqrt(v / (reps - 1) / reps);
  CHECK(std::abs(m - (-mu)) <= 3 * se);

  const auto lim = sample_limit(mu, 1.0, mu, 1, reps, 9);
  double lm = 0;
  for (double x : lim) lm += x;
  lm /= reps;
  CHECK(std::abs(lm - (-mu)) <= 3 * std::sqrt((mu + mu * (1 - mu)) / reps));
}

TEST_CASE("limit sample variance after one step") {
  const double mu = 1 / 5.3;
  const int reps = 200000;
  const auto lim = sample_limit(mu, 1.0, mu, 1, reps, 3);
  double m = 0, v = 0;
  for (double x : lim) m += x;
  m /= reps;
  for (double x : lim) v += (x - m) * (x - m);
  v /= reps - 1;
  CHECK(v == doctest::Approx(mu + mu * (1 - mu)).epsilon(0.02));
}

TEST_CASE("KS distance of a well-specified sample is consistent with the KS law") {
  // The limit sampler against itself under a different seed: sqrt(n/2) KS
  // should look like a Kolmogorov variate, not be pinned at 0 or blow up.
  const int n = 20000;
  const auto a = sample_limit(0.2, 1.0, 0.2, 10, n, 1);
  const auto b = sample_limit(0.2, 1.0, 0.2, 10, n, 2);
  const double stat = std::sqrt(n / 2.0) * ks_two_sample(a, b);
  CHECK(stat > 0.2);
  CHECK(stat < 1.95);  // 99.9% quantile of the Kolmogorov law is ~1.95
}

TEST_CASE("harness report: warnings, validation, determinism") {
  LimitHarnessConfig cfg;
  cfg.system_sizes = {25, 100};
  cfg.replications = 500;
  const auto a = run_limit_harness(cfg);
  REQUIRE(a.warnings.size() == 1);
  CHECK(a.warnings[0].find("KS noise dominates") != std::string::npos);
  const auto b = run_limit_harness(cfg);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].ks_distance == b.entries[i].ks_distance);
    CHECK(a.entries[i].scaled_mean == b.entries[i].scaled_mean);
  }

  auto bad = cfg;
  bad.system_sizes = {100, 25};
  CHECK_THROWS_AS(run_limit_harness(bad), InvalidParameter);
  bad.system_sizes = {1, 25};
  CHECK_THROWS_AS(run_limit_harness(bad), InvalidParameter);
  bad = cfg;
  bad.lambda_star = 0.5;
  CHECK_THROWS_AS(run_limit_harness(bad), InvalidParameter);
  bad = cfg;
  bad.horizon = -1;
  CHECK_THROWS_AS(run_limit_harness(bad), InvalidParameter);
}

TEST_CASE("KS trend over N") {
  LimitHarnessConfig cfg;
  cfg.system_sizes = {25, 100, 400};
  cfg.replications = 100000;
  const auto report = run_limit_harness(cfg);
  for (const auto& e : report.entries) {
    MESSAGE("N=" << e.n << " KS=" << e.ks_distance << " mean=" << e.scaled_mean
                 << " sd=" << e.scaled_sd);
  }
  CHECK(report.ks_strictly_decreasing());
}

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "midnight/compare.hpp"
#include "midnight/diffusion.hpp"
#include "midnight/exact_chain.hpp"
#include "midnight/limit_harness.hpp"
#include "midnight/numerics.hpp"
#include "midnight/projection.hpp"

using namespace midnight;
using boost::math::quadrature::gauss_kronrod;
using Clock = std::chrono::steady_clock;

namespace {

const ModelParams kSmall = validate_params(18, 3.03, 1 / 5.3);
const ModelParams kMid = validate_params(66, 11.37, 1 / 5.3);
const ModelParams kLarge = validate_params(500, 90.95, 1 / 5.3);

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s [%d] %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", id, name.c_str(),
              out.detail.c_str(), secs);
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

double adaptive(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

DiffusionParams manual(double theta, double sigma2, double mu) {
  return {theta, sigma2, -2 * theta / sigma2, theta / mu, sigma2 / (2 * mu - mu * mu)};
}

// ------------------------------------------------------------------ 1

Outcome kernel_normalization() {
  double worst = 0;
  int count = 0;
  for (const auto& p : {kSmall, kLarge}) {
    const auto d = derive_diffusion_params(p);
    const TransitionKernel k(d, p.daily_service_prob());
    for (int i = 0; i < 20; ++i) {
      const double x = -50.0 + 100.0 * i / 19.0;  // both branches
      const double m = k.mean_next(x);
      const double mass = adaptive([&](double y) { return transition_density(k, x, y); },
                                   m - 40 * k.sd(), m + 40 * k.sd());
      worst = std::max(worst, std::abs(mass - 1.0));
      ++count;
    }
  }
  return {count == 40 && worst <= 1e-10,
          std::to_string(count) + " points, max |mass - 1| = " + fmt("%.2e", worst) +
              " (tol 1e-10)"};
}

// ------------------------------------------------------------------ 2

Outcome dou_invariance() {
  double worst = 0;
  const std::vector<std::pair<DiffusionParams, double>> sets{
      {manual(-1, 4, 0.5), 0.5},
      {derive_diffusion_params(kSmall), kSmall.daily_service_prob()},
      {derive_diffusion_params(kLarge), kLarge.daily_service_prob()}};
  for (const auto& [d, mu] : sets) {
    const auto pi = dou_stationary_density(d.drift, d.variance, mu);
    const TransitionKernel k(d, mu, TransitionKernel::Branching::kPureOu);
    const double sd = std::sqrt(pi.variance());
    for (int i = -16; i <= 16; ++i) {
      const double x = pi.mean() + 0.25 * i * sd;
      const double lhs = adaptive([&](double y) { return transition_density(k, y, x) * pi.pdf(y); },
                                  pi.mean() - 40 * sd, pi.mean() + 40 * sd);
      worst = std::max(worst, std::abs(lhs - pi.pdf(x)));
    }
  }
  return {worst <= 1e-8, "3 parameter sets, mean +/- 4 sd, max residual " + fmt("%.2e", worst) +
                             " (tol 1e-8)"};
}

// ------------------------------------------------------------------ 3

Outcome exact_chain() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& p : {kSmall, kMid, kLarge}) {
    const auto start = Clock::now();
    const int kmax = default_truncation(p);
    const auto pi = stationary_pmf(build_kernel(p, kmax), 1e-12);
    const double flow = std::abs(p.daily_arrival_rate() - p.daily_service_prob() * pi.mean_busy());
    const auto wide = stationary_pmf(build_kernel(p, 2 * kmax), 1e-12);
    std::vector<double> narrow = pi.mass;
    narrow.resize(wide.mass.size(), 0.0);
    const double shift = numerics::total_variation(narrow, wide.mass);
    const double secs = seconds_since(start);
    const double limit = p.n_servers() == 500 ? 600 : 60;
    const bool good = pi.residual <= 1e-12 && wide.residual <= 1e-12 && flow <= 1e-8 &&
                      shift <= 1e-10 && secs < limit;
    ok = ok && good;
    detail << "N=" << p.n_servers() << " residual " << fmt("%.1e", pi.residual) << " flow "
           << fmt("%.1e", flow) << " doubling TV " << fmt("%.1e", shift) << " "
           << fmt("%.1f", secs) << "s; ";
  }
  return {ok, detail.str() + "tols 1e-12/1e-8/1e-10"};
}

// ------------------------------------------------------------------ 4

Outcome proxy_formula() {
  std::ostringstream detail;
  bool ok = true;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& p : {kSmall, kMid, kLarge}) {
    const auto d = derive_diffusion_params(p);
    const auto f = proxy_density(d, p.daily_service_prob());
    const double gap = std::abs(f.left_limit_at_zero() - f.pdf(0.0));
    const auto pdf = [&](double x) { return f.pdf(x); };
    const double mass = ts.integrate(pdf, -inf, 0.0) + ts.integrate(pdf, 0.0, inf);
    const bool gamma_exact = f.tail_rate() == -2.0 * d.drift / d.variance;
    const bool good = gap <= 1e-12 && std::abs(mass - 1) <= 1e-8 && gamma_exact;
    ok = ok && good;
    detail << "N=" << p.n_servers() << " gap " << fmt("%.1e", gap) << " |mass-1| "
           << fmt("%.1e", std::abs(mass - 1)) << (gamma_exact ? " gamma exact; " : " gamma OFF; ");
  }
  return {ok, detail.str() + "tols 1e-12/1e-8"};
}

// ------------------------------------------------------------------ 5

Outcome projection_vs_monte_carlo() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& p : {kSmall, kMid}) {
    const int n = p.n_servers();
    const int kmax = default_truncation(p);
    const auto res = project_stationary_density(p);
    const auto projected = normalized(bin_to_lattice(res.reconstruction, n, kmax));
    const auto hist = normalized(diffusion_histogram(
        res.diffusion, p.daily_service_prob(), 10'000'000, 10'000, 20121001,
        -static_cast<double>(n), kmax + 1));
    const double tv = numerics::total_variation(projected, hist);
    ok = ok && tv <= 0.02;
    detail << "N=" << n << " TV " << fmt("%.4f", tv) << "; ";
  }
  return {ok, detail.str() + "10^7 steps, tol 0.02"};
}

// ------------------------------------------------------------------ 6

Outcome dou_self_test() {
  std::ostringstream detail;
  bool ok = true;
  const std::vector<std::pair<DiffusionParams, double>> sets{
      {manual(-1, 4, 0.5), 0.5},
      {derive_diffusion_params(kSmall), kSmall.daily_service_prob()}};
  for (const auto& [d, mu] : sets) {
    const auto pi = dou_stationary_density(d.drift, d.variance, mu);
    const double sd = std::sqrt(pi.variance());
    const TransitionKernel k(d, mu, TransitionKernel::Branching::kPureOu);
    const auto basis = fit_basis(pi.mean() - 6 * sd, pi.mean() + 6 * sd, 64);
    auto sys = assemble_gram(basis, k, pi, 16);
    solve_gram(sys);
    const auto rec = reconstruct_density(sys);
    double worst = 0;
    for (int i = 0; i <= 600; ++i) {
      worst = std::max(worst, std::abs(rec.ratio(pi.mean() - 3 * sd + i * sd / 100) - 1.0));
    }
    ok = ok && worst <= 0.05;
    detail << "theta=" << fmt("%.3g", d.drift) << " max |q-1| " << fmt("%.2e", worst) << "; ";
  }
  return {ok, detail.str() + "m=64, tol 0.05"};
}

// ------------------------------------------------------------------ 7

Outcome figure_one() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& p : {kSmall, kMid, kLarge}) {
    const auto r = compare_methods(p);
    ok = ok && r.tv_formula_vs_exact <= 0.05 && r.tv_projection_vs_exact <= 0.05;
    detail << "N=" << p.n_servers() << " TV(formula) " << fmt("%.4f", r.tv_formula_vs_exact)
           << " TV(projection) " << fmt("%.4f", r.tv_projection_vs_exact) << "; ";
  }
  return {ok, detail.str() + "tol 0.05"};
}

// ------------------------------------------------------------------ 8

Outcome limit_trend() {
  LimitHarnessConfig cfg;
  cfg.system_sizes = {25, 100, 400};
  cfg.horizon = 10;
  cfg.replications = 100000;
  cfg.service_prob = 1 / 5.3;
  cfg.beta_star = 1.0;
  const auto report = run_limit_harness(cfg);
  std::ostringstream detail;
  for (const auto& e : report.entries) {
    detail << "N=" << e.n << " KS " << fmt("%.4f", e.ks_distance) << "; ";
  }
  return {report.ks_strictly_decreasing() && report.warnings.empty(),
          detail.str() + "strictly decreasing required"};
}

// ------------------------------------------------------------------ 9

#ifdef MIDNIGHT_CLI_PATH
std::string run_cli(const std::string& args, int& code) {
  namespace fs = std::filesystem;
  const fs::path dir = MIDNIGHT_TEST_TMPDIR;
  fs::create_directories(dir);
  const auto out = dir / "out.txt";
  const std::string cmd = std::string("\"") + MIDNIGHT_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
#endif

Outcome determinism() {
  int checked = 0;
  bool ok = true;
  const auto a = simulate_path(kSmall, 100000, 42);
  const auto b = simulate_path(kSmall, 100000, 42);
  ok = ok && a.counts == b.counts;
  const auto d = derive_diffusion_params(kSmall);
  ok = ok && simulate_diffusion(d, 1 / 5.3, 100000, 42) == simulate_diffusion(d, 1 / 5.3, 100000, 42);
  checked += 2;
#ifdef MIDNIGHT_CLI_PATH
  const std::string model = " --n 18 --lambda 3.03 --mean-los 5.3";
  for (const std::string cmd :
       {"exact" + model, "formula" + model, "projection" + model + " --format json",
        "simulate" + model + " --steps 200000 --seed 7",
        "simulate" + model + " --steps 200000 --seed 7 --process diffusion",
        "compare" + model + " --format json",
        std::string("limit-check --sizes 25 100 --replications 5000 --seed 3")}) {
    int c1 = 0, c2 = 0;
    const auto first = run_cli(cmd, c1);
    const auto second = run_cli(cmd, c2);
    ok = ok && c1 == 0 && c2 == 0 && !first.empty() && first == second;
    ++checked;
  }
#endif
  return {ok, std::to_string(checked) + " seeded runs compared byte for byte"};
}

}  // namespace

int main() {
  criterion(1, "kernel normalization", kernel_normalization);
  criterion(2, "DOU stationarity invariance", dou_invariance);
  criterion(3, "exact chain residual, flow balance, truncation", exact_chain);
  criterion(4, "proxy density continuity, mass, gamma", proxy_formula);
  criterion(5, "projection vs diffusion Monte Carlo", projection_vs_monte_carlo);
  criterion(6, "projection DOU self-test", dou_self_test);
  criterion(7, "three-way lattice agreement", figure_one);
  criterion(8, "limit KS trend", limit_trend);
  criterion(9, "determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

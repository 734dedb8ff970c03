#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "midnight/compare.hpp"
#include "midnight/io.hpp"
#include "midnight/numerics.hpp"

using namespace midnight;

TEST_CASE("lattice binning conserves mass") {
  const auto p = validate_params(18, 3.03, 1 / 5.3);
  const auto d = derive_diffusion_params(p);
  const auto proxy = proxy_density(d, p.daily_service_prob());
  const int kmax = 400;
  const auto bins = bin_to_lattice(proxy, 18, kmax);
  const double total = std::accumulate(bins.begin(), bins.end(), 0.0);
  const double covered = proxy.mass(-18.5, kmax - 18 + 0.5);
  CHECK(std::abs(total - covered) <= 1e-10);

  // Count k receives [k - N - 0.5, k - N + 0.5).
  CHECK(bins[18] == doctest::Approx(proxy.cdf(0.5) - proxy.cdf(-0.5)).epsilon(1e-12));
  CHECK(bins[0] == doctest::Approx(proxy.cdf(-17.5) - proxy.cdf(-18.5)).epsilon(1e-12));

  const NormalDensity n(2.0, 9.0);
  const auto nb = bin_to_lattice(n, 30, 80);
  CHECK(std::abs(std::accumulate(nb.begin(), nb.end(), 0.0) - n.mass(-30.5, 50.5)) <= 1e-10);
}

TEST_CASE("reconstruction binning conserves mass") {
  ProjectionOptions opt;
  opt.elements = 64;
  const auto p = validate_params(18, 3.03, 1 / 5.3);
  const auto res = project_stationary_density(p, opt);
  const auto& rec = res.reconstruction;
  const auto& basis = rec.system().basis;
  // Bins covering the whole grid: first center well below grid_lo.
  const double first = std::floor(basis.grid_lo()) - 1;
  const int count = static_cast<int>(std::ceil(basis.grid_hi() - first)) + 2;
  const auto bins = rec.bin_masses(first, count);
  const double lo = first - 0.5, hi = first + count - 0.5;
  // Same integral in one pass over GL panels split at the grid nodes.
  std::vector<double> cuts{lo};
  for (double x : basis.nodes()) cuts.push_back(x);
  cuts.push_back(hi);
  const auto& rule = numerics::gauss_legendre(16);
  double want = 0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    want += numerics::integrate_panel(rule, cuts[j], cuts[j + 1],
                                      [&](double x) { return rec.density(x); });
  }
  CHECK(std::abs(std::accumulate(bins.begin(), bins.end(), 0.0) - want) <= 1e-10);
}

TEST_CASE("summaries of a known pmf") {
  const std::vector<double> pmf{0.25, 0.5, 0.25};
  const auto s = summarize("x", pmf, 1);
  CHECK(s.mean == doctest::Approx(1.0));
  CHECK(s.sd == doctest::Approx(std::sqrt(0.5)));
  CHECK(s.p_wait == doctest::Approx(0.25));
  CHECK(normalized({1.0, 3.0})[1] == doctest::Approx(0.75));
  CHECK_THROWS_AS(normalized({0.0, 0.0}), InvalidParameter);
}

TEST_CASE("three-way comparison for N=18") {
  const auto p = validate_params(18, 3.03, 1 / 5.3);
  const auto report = compare_methods(p);
  CHECK(report.truncation == default_truncation(p));
  for (const auto* pmf : {&report.exact, &report.formula, &report.projection}) {
    REQUIRE(pmf->size() == static_cast<std::size_t>(report.truncation + 1));
    CHECK(std::accumulate(pmf->begin(), pmf->end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  MESSAGE("TV formula/exact " << report.tv_formula_vs_exact << ", projection/exact "
                              << report.tv_projection_vs_exact);
  CHECK(report.tv_formula_vs_exact <= 0.05);
  CHECK(report.tv_projection_vs_exact <= 0.05);
  CHECK(report.methods.size() == 3);
  double busy = 0;
  for (std::size_t k = 0; k < report.exact.size(); ++k) {
    busy += std::min<double>(static_cast<double>(k), 18.0) * report.exact[k];
  }
  CHECK(busy == doctest::Approx(3.03 * 5.3).epsilon(1e-9));
  CHECK(report.methods[0].mean > busy);

  const auto j = io::to_json(report);
  CHECK(j["params"]["n"] == 18);
  CHECK(j["methods"].size() == 3);
  CHECK(j["methods"][1]["name"] == "formula");
  for (const char* key : {"formula_vs_exact", "projection_vs_exact", "projection_vs_formula"}) {
    CHECK(j["tv"].contains(key));
  }

  std::ostringstream csv;
  io::write_comparison_csv(csv, report);
  CHECK(csv.str().rfind("state,exact,formula,projection\n0,", 0) == 0);
}

TEST_CASE("json and csv writers") {
  const auto p = validate_params(66, 11.37, 1 / 5.3);
  const auto j = io::to_json(p);
  CHECK(j["n"] == 66);
  CHECK(j["rho"].get<double>() == doctest::Approx(p.load()));

  LimitReport r{{{25, 4.0, 0.06, -0.7, 1.0, 1000, 10}, {100, 18.0, 0.03, -0.7, 1.1, 1000, 10}},
                0.0, 1.0, {}};
  const auto lj = io::to_json(r);
  CHECK(lj["entries"][1]["n"] == 100);
  CHECK(lj["entries"][0]["ks_distance"].get<double>() == doctest::Approx(0.06));
  CHECK(lj["ks_strictly_decreasing"] == true);
  std::ostringstream csv;
  io::write_limit_csv(csv, r);
  CHECK(csv.str() == "n,ks_distance,replications,horizon\n25,0.06,1000,10\n100,0.03,1000,10\n");

  std::ostringstream dens;
  const std::vector<double> xs{-1.0, 0.5};
  const std::vector<double> ys{0.125, 2.0 / 3.0};
  io::write_density_csv(dens, xs, ys);
  CHECK(dens.str() == "x,density\n-1,0.125\n0.5,0.666666666667\n");
  CHECK(io::format_number(1234567.891234567) == "1234567.89123");
}

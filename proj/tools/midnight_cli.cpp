// midnight: exact chain, proxy formula, projection, simulation and the
// many-server limit check for the midnight-count queue.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "midnight/compare.hpp"
#include "midnight/diffusion.hpp"
#include "midnight/exact_chain.hpp"
#include "midnight/io.hpp"
#include "midnight/limit_harness.hpp"
#include "midnight/model.hpp"
#include "midnight/projection.hpp"

namespace {

using namespace midnight;
using nlohmann::ordered_json;

constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

struct Knobs {
  std::optional<double> n, lambda, mean_los, mu;
  std::optional<int> truncation, elements, points, quadrature_order;
  std::optional<double> grid_lo, grid_hi, tol, beta_star, lambda_star;
  std::optional<long long> steps, burn_in;
  std::optional<int> replications, horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, format, process;
  std::optional<std::vector<int>> sizes;
  std::string config;
};

const std::set<std::string> kConfigKeys{
    "n",        "lambda",      "mean_los",    "mu",      "truncation",
    "elements", "points",      "quadrature_order", "grid_lo", "grid_hi",
    "tol",      "beta_star",   "lambda_star", "steps",   "burn_in",
    "replications", "horizon", "seed",        "out",     "format",
    "process",  "sizes"};

template <class T>
void add_knob(CLI::App* app, const std::string& name, std::optional<T>& slot,
          const std::string& help) {
  app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
}

template <class T>
void fill(std::optional<T>& slot, const nlohmann::json& cfg,
          const std::string& key) {
  if (!slot && cfg.contains(key)) slot = cfg.at(key).get<T>();
}

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot read config file " + path);
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("config file is not valid JSON: " +
                           std::string(e.what()));
  }
  if (!raw.is_object()) throw InvalidParameter("config file must hold an object");
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : raw.items()) {
    std::string k = key;
    for (char& c : k) {
      if (c == '-') c = '_';
    }
    if (!kConfigKeys.contains(k)) {
      throw InvalidParameter("unknown config key '" + key + "'");
    }
    cfg[k] = value;
  }
  return cfg;
}

void merge_config(Knobs& k, const nlohmann::json& cfg) {
  try {
    if (!k.mu && !k.mean_los) {
      if (cfg.contains("mu") && cfg.contains("mean_los")) {
        throw InvalidParameter("config sets both mu and mean_los");
      }
      fill(k.mu, cfg, "mu");
      fill(k.mean_los, cfg, "mean_los");
    }
    fill(k.n, cfg, "n");
    fill(k.lambda, cfg, "lambda");
    fill(k.truncation, cfg, "truncation");
    fill(k.elements, cfg, "elements");
    fill(k.points, cfg, "points");
    fill(k.quadrature_order, cfg, "quadrature_order");
    fill(k.grid_lo, cfg, "grid_lo");
    fill(k.grid_hi, cfg, "grid_hi");
    fill(k.tol, cfg, "tol");
    fill(k.beta_star, cfg, "beta_star");
    fill(k.lambda_star, cfg, "lambda_star");
    fill(k.steps, cfg, "steps");
    fill(k.burn_in, cfg, "burn_in");
    fill(k.replications, cfg, "replications");
    fill(k.horizon, cfg, "horizon");
    fill(k.seed, cfg, "seed");
    fill(k.out, cfg, "out");
    fill(k.format, cfg, "format");
    fill(k.process, cfg, "process");
    fill(k.sizes, cfg, "sizes");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("config value has the wrong type: " +
                           std::string(e.what()));
  }
}

// ------------------------------------------------------------ resolution

double service_prob(const Knobs& k, std::optional<double> fallback = {}) {
  if (k.mu) return *k.mu;
  if (k.mean_los) {
    if (!(*k.mean_los > 1)) {
      throw InvalidParameter("mean_los must exceed one day (mu in (0,1))");
    }
    return 1.0 / *k.mean_los;
  }
  if (fallback) return *fallback;
  throw InvalidParameter("one of --mu or --mean-los is required");
}

ModelParams model(const Knobs& k) {
  if (!k.n) throw InvalidParameter("--n is required");
  if (!k.lambda) throw InvalidParameter("--lambda is required");
  return validate_params(*k.n, *k.lambda, service_prob(k));
}

std::string format_of(const Knobs& k) {
  const std::string f = k.format.value_or("csv");
  if (f != "csv" && f != "json") {
    throw InvalidParameter("format must be csv or json");
  }
  return f;
}

int truncation_of(const Knobs& k, const ModelParams& p) {
  const int t = k.truncation.value_or(default_truncation(p));
  if (t < p.n_servers()) throw InvalidParameter("truncation below server count");
  return t;
}

ProjectionOptions projection_options(const Knobs& k) {
  ProjectionOptions opt;
  if (k.elements) {
    if (*k.elements < 4) throw InvalidParameter("elements must be at least 4");
    opt.elements = *k.elements;
  }
  if (k.quadrature_order) {
    if (*k.quadrature_order < 2) {
      throw InvalidParameter("quadrature_order must be at least 2");
    }
    opt.quadrature_order = *k.quadrature_order;
  }
  opt.grid_lo = k.grid_lo;
  opt.grid_hi = k.grid_hi;
  if (opt.grid_lo && !(*opt.grid_lo < 0)) {
    throw InvalidParameter("grid_lo must be negative");
  }
  if (opt.grid_hi && !(*opt.grid_hi > 0)) {
    throw InvalidParameter("grid_hi must be positive");
  }
  return opt;
}

// The proxy is the reference density of every continuous method; a
// nonnegative drift is a solver-level failure, not a malformed config.
PiecewiseDensity checked_proxy(const ModelParams& p) {
  const auto d = derive_diffusion_params(p);
  if (!(d.drift < 0)) {
    throw SolverError("proxy density not normalizable (γ ≤ 0)", d.drift);
  }
  return proxy_density(d, p.daily_service_prob());
}

// Evaluation points for density output: the working domain unless
// overridden, `points` equally spaced values.
std::vector<double> output_grid(const Knobs& k, double lo_default,
                                double hi_default) {
  const double lo = k.grid_lo.value_or(lo_default);
  const double hi = k.grid_hi.value_or(hi_default);
  const int points = k.points.value_or(501);
  if (points < 2) throw InvalidParameter("points must be at least 2");
  if (!(lo < hi)) throw InvalidParameter("grid_lo must be below grid_hi");
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * i / (points - 1);
  }
  return xs;
}

void emit(const Knobs& k, const std::string& text) {
  if (!k.out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*k.out, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidParameter("cannot write " + *k.out);
  f << text;
  if (!f) throw InvalidParameter("failed writing " + *k.out);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json density_table(std::span<const double> xs,
                           std::span<const double> ys) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    rows.push_back({{"x", xs[i]}, {"density", ys[i]}});
  }
  return rows;
}

// ------------------------------------------------------------ commands

void run_exact(const Knobs& k) {
  const auto p = model(k);
  const auto fmt = format_of(k);
  const double tol = k.tol.value_or(1e-12);
  if (!(tol > 0)) throw InvalidParameter("tol must be positive");
  const int trunc = truncation_of(k, p);
  const auto pi = stationary_pmf(build_kernel(p, trunc), tol);
  std::cerr << "exact: truncation " << trunc << ", residual " << pi.residual
            << (pi.direct_solve ? " (direct solve)" : "") << " after "
            << pi.iterations << " iterations\n";
  if (fmt == "csv") {
    std::ostringstream s;
    io::write_pmf_csv(s, pi.mass);
    emit(k, s.str());
    return;
  }
  ordered_json j{{"params", io::to_json(p)},
                 {"truncation", trunc},
                 {"residual", pi.residual},
                 {"iterations", pi.iterations},
                 {"direct_solve", pi.direct_solve},
                 {"mean", pi.mean()},
                 {"sd", pi.sd()},
                 {"mean_busy", pi.mean_busy()},
                 {"p_wait", pi.prob_waiting()},
                 {"pmf", pi.mass}};
  emit(k, dump(j));
}

void run_formula(const Knobs& k) {
  const auto p = model(k);
  const auto fmt = format_of(k);
  const auto proxy = checked_proxy(p);
  const auto d = derive_diffusion_params(p);
  const auto [lo, hi] = working_domain(d);
  const auto xs = output_grid(k, lo, hi);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = proxy.pdf(xs[i]);
  std::cerr << "formula: gamma " << proxy.tail_rate() << ", mass below zero "
            << proxy.negative_mass() << "\n";
  if (fmt == "csv") {
    std::ostringstream s;
    io::write_density_csv(s, xs, ys);
    emit(k, s.str());
    return;
  }
  ordered_json j{{"params", io::to_json(p)},
                 {"diffusion", io::to_json(d)},
                 {"alpha_pos", proxy.alpha_pos()},
                 {"alpha_neg", proxy.alpha_neg()},
                 {"negative_mass", proxy.negative_mass()},
                 {"density", density_table(xs, ys)}};
  emit(k, dump(j));
}

void run_projection(const Knobs& k) {
  const auto p = model(k);
  const auto fmt = format_of(k);
  checked_proxy(p);
  const auto opt = projection_options(k);
  const auto res = project_stationary_density(p, opt);
  const auto& basis = res.reconstruction.system().basis;
  const auto xs = output_grid(k, basis.grid_lo(), basis.grid_hi());
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ys[i] = res.reconstruction.density(xs[i]);
  }
  const auto diag = io::projection_diagnostics(res);
  std::cerr << "projection: " << diag.dump() << "\n";
  if (fmt == "csv") {
    std::ostringstream s;
    io::write_density_csv(s, xs, ys);
    emit(k, s.str());
    if (k.out) {
      Knobs side = k;
      side.out = *k.out + ".diagnostics.json";
      emit(side, dump(diag));
    }
    return;
  }
  ordered_json j{{"params", io::to_json(p)},
                 {"diagnostics", diag},
                 {"density", density_table(xs, ys)}};
  emit(k, dump(j));
}

void run_simulate(const Knobs& k) {
  const auto p = model(k);
  const auto fmt = format_of(k);
  const long long steps = k.steps.value_or(1'000'000);
  const long long burn_in = k.burn_in.value_or(10'000);
  const std::uint64_t seed = k.seed.value_or(1);
  if (steps < 1) throw InvalidParameter("steps must be at least 1");
  if (burn_in < 0) throw InvalidParameter("burn_in must be nonnegative");
  const int trunc = truncation_of(k, p);
  const std::string process = k.process.value_or("chain");
  const int n = p.n_servers();

  std::vector<double> mass;
  if (process == "chain") {
    mass = simulate_occupancy(p, steps, burn_in, seed, trunc);
  } else if (process == "diffusion") {
    // Unit bins centered on the count lattice, shifted by N.
    mass = diffusion_histogram(derive_diffusion_params(p),
                               p.daily_service_prob(), steps, burn_in, seed,
                               -static_cast<double>(n), trunc + 1);
  } else {
    throw InvalidParameter("process must be chain or diffusion");
  }
  std::cerr << "simulate: " << process << ", " << steps << " steps after "
            << burn_in << " burn-in, seed " << seed << "\n";

  if (fmt == "csv") {
    std::ostringstream s;
    if (process == "chain") {
      io::write_pmf_csv(s, mass);
    } else {
      std::vector<double> xs(mass.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = static_cast<double>(i) - n;
      }
      io::write_density_csv(s, xs, mass);
    }
    emit(k, s.str());
    return;
  }
  ordered_json j{{"params", io::to_json(p)},
                 {"process", process},
                 {"steps", steps},
                 {"burn_in", burn_in},
                 {"seed", seed},
                 {"pmf", mass}};
  emit(k, dump(j));
}

void run_limit_check(const Knobs& k) {
  const auto fmt = format_of(k);
  LimitHarnessConfig cfg;
  cfg.system_sizes = k.sizes.value_or(std::vector<int>{25, 100, 400});
  cfg.horizon = k.horizon.value_or(10);
  cfg.replications = k.replications.value_or(100000);
  cfg.service_prob = service_prob(k, 1.0 / 5.3);
  cfg.beta_star = k.beta_star.value_or(1.0);
  cfg.lambda_star = k.lambda_star;
  cfg.seed = k.seed.value_or(1);
  const auto report = run_limit_harness(cfg);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : report.entries) {
    std::cerr << "limit-check: N=" << e.n << " KS=" << e.ks_distance << "\n";
  }
  if (fmt == "csv") {
    std::ostringstream s;
    io::write_limit_csv(s, report);
    emit(k, s.str());
    return;
  }
  emit(k, dump(io::to_json(report)));
}

void run_compare(const Knobs& k) {
  const auto p = model(k);
  const auto fmt = format_of(k);
  checked_proxy(p);
  CompareOptions opt;
  opt.truncation = truncation_of(k, p);
  opt.tol = k.tol.value_or(1e-12);
  if (!(opt.tol > 0)) throw InvalidParameter("tol must be positive");
  opt.projection = projection_options(k);
  const auto report = compare_methods(p, opt);
  std::cerr << "compare: TV formula/exact " << report.tv_formula_vs_exact
            << ", projection/exact " << report.tv_projection_vs_exact
            << ", projection/formula " << report.tv_projection_vs_formula
            << "\n";
  if (fmt == "csv") {
    std::ostringstream s;
    io::write_comparison_csv(s, report);
    emit(k, s.str());
    return;
  }
  emit(k, dump(io::to_json(report)));
}

// ------------------------------------------------------------ parser

void add_service(CLI::App* app, Knobs& k) {
  auto* los = app->add_option_function<double>(
      "--mean-los", [&k](const double& v) { k.mean_los = v; },
      "mean length of stay in days");
  auto* mu = app->add_option_function<double>(
      "--mu", [&k](const double& v) { k.mu = v; }, "daily discharge probability");
  los->excludes(mu);
}

void add_model(CLI::App* app, Knobs& k) {
  add_knob(app, "--n", k.n, "number of servers (beds)");
  add_knob(app, "--lambda", k.lambda, "daily arrival rate");
  add_service(app, k);
}

void add_io(CLI::App* app, Knobs& k) {
  add_knob(app, "--out", k.out, "output file (stdout when omitted)");
  app->add_option_function<std::string>(
         "--format", [&k](const std::string& v) { k.format = v; },
         "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--config", k.config, "JSON config file; flags win");
}

void add_grid(CLI::App* app, Knobs& k) {
  add_knob(app, "--grid-lo", k.grid_lo, "left end of the grid");
  add_knob(app, "--grid-hi", k.grid_hi, "right end of the grid");
  add_knob(app, "--points", k.points, "density output points");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Midnight-count queue: exact, diffusion and projection solvers"};
  app.require_subcommand(1);
  Knobs k;

  auto* exact = app.add_subcommand("exact", "stationary pmf of the exact chain");
  add_model(exact, k);
  add_knob(exact, "--truncation", k.truncation, "top state of the chain");
  add_knob(exact, "--tol", k.tol, "L1 stationarity tolerance");
  add_io(exact, k);

  auto* formula = app.add_subcommand("formula", "closed-form proxy density");
  add_model(formula, k);
  add_grid(formula, k);
  add_io(formula, k);

  auto* projection =
      app.add_subcommand("projection", "Galerkin projection density");
  add_model(projection, k);
  add_grid(projection, k);
  add_knob(projection, "--elements", k.elements, "number of grid elements");
  add_knob(projection, "--quadrature-order", k.quadrature_order,
       "Gauss-Legendre points per element");
  add_io(projection, k);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo occupancy");
  add_model(simulate, k);
  add_knob(simulate, "--steps", k.steps, "recorded steps");
  add_knob(simulate, "--burn-in", k.burn_in, "discarded steps");
  add_knob(simulate, "--seed", k.seed, "random seed");
  add_knob(simulate, "--truncation", k.truncation, "top lattice state");
  simulate
      ->add_option_function<std::string>(
          "--process", [&k](const std::string& v) { k.process = v; },
          "chain or diffusion")
      ->check(CLI::IsMember({"chain", "diffusion"}));
  add_io(simulate, k);

  auto* limit = app.add_subcommand("limit-check", "many-server limit trend");
  add_service(limit, k);
  add_knob(limit, "--sizes", k.sizes, "increasing system sizes");
  add_knob(limit, "--horizon", k.horizon, "days simulated (K)");
  add_knob(limit, "--replications", k.replications, "replications per size");
  add_knob(limit, "--beta-star", k.beta_star, "QED spare-capacity parameter");
  add_knob(limit, "--lambda-star", k.lambda_star, "limit of Lambda/N");
  add_knob(limit, "--seed", k.seed, "random seed");
  add_io(limit, k);

  auto* compare = app.add_subcommand("compare", "exact vs formula vs projection");
  add_model(compare, k);
  add_knob(compare, "--truncation", k.truncation, "top state of the lattice");
  add_knob(compare, "--tol", k.tol, "L1 stationarity tolerance");
  add_knob(compare, "--elements", k.elements, "number of grid elements");
  add_knob(compare, "--grid-lo", k.grid_lo, "left end of the grid");
  add_knob(compare, "--grid-hi", k.grid_hi, "right end of the grid");
  add_knob(compare, "--quadrature-order", k.quadrature_order,
       "Gauss-Legendre points per element");
  add_io(compare, k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (!k.config.empty()) merge_config(k, read_config(k.config));
    if (exact->parsed()) run_exact(k);
    if (formula->parsed()) run_formula(k);
    if (projection->parsed()) run_projection(k);
    if (simulate->parsed()) run_simulate(k);
    if (limit->parsed()) run_limit_check(k);
    if (compare->parsed()) run_compare(k);
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual()
              << ")\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}

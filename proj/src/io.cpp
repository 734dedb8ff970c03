#include "midnight/io.hpp"

#include <cstdio>
#include <stdexcept>

namespace midnight::io {

using nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_pmf_csv(std::ostream& out, std::span<const double> mass) {
  out << "state,probability\n";
  for (std::size_t k = 0; k < mass.size(); ++k) {
    out << k << ',' << format_number(mass[k]) << '\n';
  }
}

void write_density_csv(std::ostream& out, std::span<const double> xs,
                       std::span<const double> densities) {
  if (xs.size() != densities.size()) {
    throw std::invalid_argument("write_density_csv: size mismatch");
  }
  out << "x,density\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << format_number(xs[i]) << ',' << format_number(densities[i]) << '\n';
  }
}

ordered_json to_json(const ModelParams& p) {
  return {{"n", p.n_servers()},
          {"lambda", p.daily_arrival_rate()},
          {"mu", p.daily_service_prob()},
          {"mean_los", p.mean_los()},
          {"rho", p.load()}};
}

ordered_json to_json(const DiffusionParams& d) {
  return {{"drift", d.drift},
          {"variance", d.variance},
          {"tail_rate", d.tail_rate},
          {"gaussian_center", d.gaussian_center},
          {"ou_variance", d.ou_variance}};
}

ordered_json to_json(const LimitReport& report) {
  ordered_json entries = ordered_json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"n", e.n},
                       {"ks_distance", e.ks_distance},
                       {"replications", e.replications},
                       {"horizon", e.horizon},
                       {"arrival_rate", e.arrival_rate},
                       {"scaled_mean", e.scaled_mean},
                       {"scaled_sd", e.scaled_sd}});
  }
  return {{"entries", entries},
          {"limit_mean", report.limit_mean},
          {"limit_sd", report.limit_sd},
          {"ks_strictly_decreasing", report.ks_strictly_decreasing()},
          {"warnings", report.warnings}};
}

ordered_json projection_diagnostics(const ProjectionResult& result) {
  const auto& rec = result.reconstruction;
  const auto& basis = rec.system().basis;
  return {{"norm_sq", rec.norm_sq()},
          {"residual", result.solution.residual},
          {"condition_estimate", result.condition_estimate},
          {"clipped_mass", rec.clipped_mass()},
          {"max_clip", rec.max_clip()},
          {"mass_before_renormalization", rec.mass_before_renormalization()},
          {"orthogonality_residual", rec.orthogonality_residual()},
          {"solver", result.solution.method},
          {"elements", basis.num_elements()},
          {"grid_lo", basis.grid_lo()},
          {"grid_hi", basis.grid_hi()}};
}

ordered_json to_json(const ComparisonReport& report) {
  ordered_json methods = ordered_json::array();
  for (const auto& m : report.methods) {
    methods.push_back(
        {{"name", m.name}, {"mean", m.mean}, {"sd", m.sd}, {"p_wait", m.p_wait}});
  }
  auto params = to_json(report.params);
  params["truncation"] = report.truncation;
  return {{"params", params},
          {"methods", methods},
          {"tv",
           {{"formula_vs_exact", report.tv_formula_vs_exact},
            {"projection_vs_exact", report.tv_projection_vs_exact},
            {"projection_vs_formula", report.tv_projection_vs_formula}}}};
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
  out << "state,exact,formula,projection\n";
  for (std::size_t k = 0; k < report.exact.size(); ++k) {
    out << k << ',' << format_number(report.exact[k]) << ','
        << format_number(report.formula[k]) << ','
        << format_number(report.projection[k]) << '\n';
  }
}

void write_limit_csv(std::ostream& out, const LimitReport& report) {
  out << "n,ks_distance,replications,horizon\n";
  for (const auto& e : report.entries) {
    out << e.n << ',' << format_number(e.ks_distance) << ',' << e.replications
        << ',' << e.horizon << '\n';
  }
}

}  // namespace midnight::io

#ifndef MIDNIGHT_IO_HPP_
#define MIDNIGHT_IO_HPP_

#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "midnight/compare.hpp"
#include "midnight/exact_chain.hpp"
#include "midnight/limit_harness.hpp"
#include "midnight/model.hpp"
#include "midnight/projection.hpp"

namespace midnight::io {

/// Formats with 12 significant digits (printf %.12g).
std::string format_number(double v);

/// Header `state,probability`, one row per lattice point.
void write_pmf_csv(std::ostream& out, std::span<const double> mass);
/// Header `x,density`.
void write_density_csv(std::ostream& out, std::span<const double> xs,
                       std::span<const double> densities);

nlohmann::ordered_json to_json(const ModelParams& p);
nlohmann::ordered_json to_json(const DiffusionParams& d);
nlohmann::ordered_json to_json(const LimitReport& report);
/// {norm_sq, residual, condition_estimate, clipped_mass, ...}.
nlohmann::ordered_json projection_diagnostics(const ProjectionResult& result);
/// {params, methods: [{name, mean, sd, p_wait}], tv: {...}}.
nlohmann::ordered_json to_json(const ComparisonReport& report);

/// Header `state,exact,formula,projection`.
void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
/// Header `n,ks_distance,replications,horizon`.
void write_limit_csv(std::ostream& out, const LimitReport& report);

}  // namespace midnight::io

#endif  // MIDNIGHT_IO_HPP_

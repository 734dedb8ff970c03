#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <memory>
#include <optional>

#include "midnight/compare.hpp"
#include "midnight/diffusion.hpp"
#include "midnight/exact_chain.hpp"
#include "midnight/io.hpp"
#include "midnight/limit_harness.hpp"
#include "midnight/model.hpp"
#include "midnight/projection.hpp"

namespace py = pybind11;
using namespace midnight;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

template <class F>
py::array_t<double> vectorized(py::array_t<double, py::array::c_style | py::array::forcecast> xs,
                               F&& f) {
  py::array_t<double> out(xs.request().shape);
  const auto in = xs.data();
  auto dst = out.mutable_data();
  for (py::ssize_t i = 0; i < xs.size(); ++i) dst[i] = f(in[i]);
  return out;
}

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_midnight, m) {
  m.doc() = "Midnight-count queue: exact chain, diffusion proxy and projection";

  static py::exception<SolverError> solver_error(m, "SolverError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SolverError& e) {
      py::set_error(solver_error, e.what());
    } catch (const InvalidParameter& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init(&validate_params), py::arg("n_servers"), py::arg("daily_arrival_rate"),
           py::arg("daily_service_prob"))
      .def_static("from_mean_los", &ModelParams::from_mean_los, py::arg("n_servers"),
                  py::arg("daily_arrival_rate"), py::arg("mean_los_days"))
      .def_property_readonly("n_servers", &ModelParams::n_servers)
      .def_property_readonly("daily_arrival_rate", &ModelParams::daily_arrival_rate)
      .def_property_readonly("daily_service_prob", &ModelParams::daily_service_prob)
      .def_property_readonly("mean_los", &ModelParams::mean_los)
      .def_property_readonly("load", &ModelParams::load)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(n_servers=" + std::to_string(p.n_servers()) +
               ", daily_arrival_rate=" + io::format_number(p.daily_arrival_rate()) +
               ", daily_service_prob=" + io::format_number(p.daily_service_prob()) + ")";
      });

  py::class_<DiffusionParams>(m, "DiffusionParams")
      .def_readonly("drift", &DiffusionParams::drift)
      .def_readonly("variance", &DiffusionParams::variance)
      .def_readonly("tail_rate", &DiffusionParams::tail_rate)
      .def_readonly("gaussian_center", &DiffusionParams::gaussian_center)
      .def_readonly("ou_variance", &DiffusionParams::ou_variance);

  m.def("derive_diffusion_params", &derive_diffusion_params, py::arg("params"));
  m.def("default_truncation", &default_truncation, py::arg("params"));

  m.def(
      "stationary_pmf",
      [](const ModelParams& p, std::optional<int> truncation, double tol) {
        const auto pi = stationary_pmf(build_kernel(p, truncation.value_or(default_truncation(p))),
                                       tol);
        return py::make_tuple(to_array(pi.mass), pi.residual);
      },
      py::arg("params"), py::arg("truncation") = py::none(), py::arg("tol") = 1e-12,
      "Stationary pmf of the exact chain and its L1 residual.");

  m.def(
      "simulate_path",
      [](const ModelParams& p, long long horizon, std::uint64_t seed) {
        const auto path = simulate_path(p, horizon, seed);
        return py::array_t<long long>(static_cast<py::ssize_t>(path.counts.size()),
                                      path.counts.data());
      },
      py::arg("params"), py::arg("horizon"), py::arg("seed"));

  m.def(
      "simulate_diffusion",
      [](const ModelParams& p, long long steps, std::uint64_t seed) {
        return to_array(simulate_diffusion(derive_diffusion_params(p), p.daily_service_prob(),
                                           steps, seed));
      },
      py::arg("params"), py::arg("steps"), py::arg("seed"));

  py::class_<PiecewiseDensity>(m, "ProxyDensity")
      .def_property_readonly("alpha_pos", &PiecewiseDensity::alpha_pos)
      .def_property_readonly("alpha_neg", &PiecewiseDensity::alpha_neg)
      .def_property_readonly("tail_rate", &PiecewiseDensity::tail_rate)
      .def_property_readonly("negative_mass", &PiecewiseDensity::negative_mass)
      .def("pdf", [](const PiecewiseDensity& d, py::array_t<double> xs) {
        return vectorized(xs, [&](double x) { return d.pdf(x); });
      })
      .def("cdf", [](const PiecewiseDensity& d, py::array_t<double> xs) {
        return vectorized(xs, [&](double x) { return d.cdf(x); });
      });

  m.def(
      "proxy_density",
      [](const ModelParams& p) {
        return proxy_density(derive_diffusion_params(p), p.daily_service_prob());
      },
      py::arg("params"));

  py::class_<ProjectionResult, std::shared_ptr<ProjectionResult>>(m, "Projection")
      .def("density",
           [](const ProjectionResult& r, py::array_t<double> xs) {
             return vectorized(xs, [&](double x) { return r.reconstruction.density(x); });
           })
      .def("ratio",
           [](const ProjectionResult& r, py::array_t<double> xs) {
             return vectorized(xs, [&](double x) { return r.reconstruction.ratio(x); });
           })
      .def_property_readonly("diagnostics",
                             [](const ProjectionResult& r) {
                               return json_to_py(io::projection_diagnostics(r));
                             })
      .def(
          "lattice_pmf",
          [](const ProjectionResult& r, int n_servers, int max_state) {
            return to_array(normalized(bin_to_lattice(r.reconstruction, n_servers, max_state)));
          },
          py::arg("n_servers"), py::arg("max_state"),
          "Unit-bin masses on counts 0..max_state, count k = N + x.");

  m.def(
      "project",
      [](const ModelParams& p, int elements, std::optional<double> grid_lo,
         std::optional<double> grid_hi, int quadrature_order) {
        ProjectionOptions opt;
        opt.elements = elements;
        opt.grid_lo = grid_lo;
        opt.grid_hi = grid_hi;
        opt.quadrature_order = quadrature_order;
        return std::make_shared<ProjectionResult>(project_stationary_density(p, opt));
      },
      py::arg("params"), py::arg("elements") = 128, py::arg("grid_lo") = py::none(),
      py::arg("grid_hi") = py::none(), py::arg("quadrature_order") = 16);

  m.def(
      "compare",
      [](const ModelParams& p, std::optional<int> truncation, int elements) {
        CompareOptions opt;
        opt.truncation = truncation;
        opt.projection.elements = elements;
        const auto r = compare_methods(p, opt);
        py::dict out = json_to_py(io::to_json(r));
        out["exact"] = to_array(r.exact);
        out["formula"] = to_array(r.formula);
        out["projection"] = to_array(r.projection);
        return out;
      },
      py::arg("params"), py::arg("truncation") = py::none(), py::arg("elements") = 128);

  m.def(
      "limit_check",
      [](std::vector<int> sizes, int horizon, int replications, double service_prob,
         double beta_star, std::uint64_t seed) {
        LimitHarnessConfig cfg;
        cfg.system_sizes = std::move(sizes);
        cfg.horizon = horizon;
        cfg.replications = replications;
        cfg.service_prob = service_prob;
        cfg.beta_star = beta_star;
        cfg.seed = seed;
        return json_to_py(io::to_json(run_limit_harness(cfg)));
      },
      py::arg("sizes"), py::arg("horizon") = 10, py::arg("replications") = 100000,
      py::arg("service_prob") = 1.0 / 5.3, py::arg("beta_star") = 1.0, py::arg("seed") = 1);
}

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flowlab/commutator_lab.hpp"
#include "flowlab/continuity_lab.hpp"
#include "flowlab/experiment.hpp"
#include "flowlab/flow_engine.hpp"
#include "flowlab/util.hpp"

namespace py = pybind11;
using namespace flowlab;

namespace {

ScalarFn wrap_scalar(const py::function& f) {
  return [f](std::span<const double> x) {
    py::gil_scoped_acquire gil;
    return f(std::vector<double>(x.begin(), x.end())).cast<double>();
  };
}

QuadratureScheme quad_from_args(const std::string& kind, int dim, long resolution,
                                std::uint64_t seed) {
  if (kind == "gauss_hermite")
    return make_quadrature(QuadKind::GaussHermite, dim, resolution);
  if (kind == "monte_carlo")
    return make_quadrature(QuadKind::MonteCarlo, dim, resolution, seed);
  throw ConfigError("quadrature kind must be gauss_hermite or monte_carlo");
}

}  // namespace

PYBIND11_MODULE(_flowlab, m) {
  m.doc() = "Gaussian flow integration, OU smoothing and commutator estimates";

  py::register_exception<ConfigError>(m, "FlowlabConfigError");

  py::class_<QuadratureScheme>(m, "QuadratureScheme")
      .def_property_readonly("dim", [](const QuadratureScheme& q) { return q.dim; })
      .def("size", &QuadratureScheme::size);

  m.def("make_quadrature", &quad_from_args, py::arg("kind"), py::arg("dim"),
        py::arg("resolution"), py::arg("seed") = 0,
        "Gaussian quadrature rule: tensor Gauss-Hermite or seeded Monte Carlo");
  m.def(
      "expectation",
      [](const py::function& f, const QuadratureScheme& q) {
        return expectation(wrap_scalar(f), q);
      },
      py::arg("f"), py::arg("quad"));
  m.def("lambda_moment", &lambda_moment, py::arg("p"));
  m.def(
      "gaussian_rotation",
      [](const Vec& x, const Vec& y, double eps) {
        Vec z(x.size()), w(x.size());
        gaussian_rotation(x, y, eps, z, w);
        return py::make_tuple(z, w);
      },
      py::arg("x"), py::arg("y"), py::arg("eps"));

  m.def(
      "mehler_apply",
      [](const py::function& u, double t, const Vec& x, int gh_nodes) {
        OuOperator op{t, make_inner_quadrature(static_cast<int>(x.size()), 0, gh_nodes)};
        return mehler_apply(wrap_scalar(u), op, x);
      },
      py::arg("u"), py::arg("t"), py::arg("x"), py::arg("gh_nodes") = 20);
  m.def(
      "mehler_gradient",
      [](const py::function& u, double t, const Vec& x, int gh_nodes) {
        OuOperator op{t, make_inner_quadrature(static_cast<int>(x.size()), 0, gh_nodes)};
        return mehler_gradient(wrap_scalar(u), op, x);
      },
      py::arg("u"), py::arg("t"), py::arg("x"), py::arg("gh_nodes") = 20);

  m.def("make_field", &make_field_from_json, py::arg("descriptor_json"),
        "Build a catalogue field from a JSON descriptor string");
  m.def("catalogue", &catalogue_names);
  m.def(
      "gaussian_divergence",
      [](const FieldSpec& f, double t, const Vec& x) { return gaussian_divergence(f, t, x); },
      py::arg("field"), py::arg("t"), py::arg("x"));

  py::class_<FieldSpec>(m, "FieldSpec")
      .def_property_readonly("dim", [](const FieldSpec& f) { return f.dim; })
      .def_property_readonly("kind", [](const FieldSpec& f) { return f.kind; })
      .def("__call__",
           [](const FieldSpec& f, double t, const Vec& x) { return f.eval(t, x); });

  py::class_<FlowTrajectoryBatch>(m, "FlowTrajectoryBatch")
      .def_property_readonly("time_grid",
                             [](const FlowTrajectoryBatch& b) { return b.time_grid; })
      .def("particles", &FlowTrajectoryBatch::particles)
      .def("position",
           [](const FlowTrajectoryBatch& b, std::size_t k, std::size_t ti) {
             const auto p = b.position(k, ti);
             return Vec(p.begin(), p.end());
           })
      .def("log_jacobian", &FlowTrajectoryBatch::logj)
      .def("log_density", &FlowTrajectoryBatch::logu)
      .def("dead_count", &FlowTrajectoryBatch::dead_count);

  m.def(
      "integrate_flow",
      [](const FieldSpec& f, std::size_t particles, std::uint64_t seed, double t1,
         int steps) {
        return integrate_flow(f, particles, seed, uniform_grid(0.0, t1, steps));
      },
      py::arg("field"), py::arg("particles"), py::arg("seed"), py::arg("horizon"),
      py::arg("steps"));
  m.def(
      "density_lr_norm",
      [](const FlowTrajectoryBatch& b, double r, std::size_t t_index) {
        const auto est = density_lr_norm(b, r, t_index);
        return py::make_tuple(est.estimate, est.std_error);
      },
      py::arg("batch"), py::arg("r"), py::arg("t_index"));

  m.def(
      "backward_density",
      [](const FieldSpec& f, double t, const Vec& y, int steps) {
        const auto bd = backward_density(f, t, y, steps);
        return py::make_tuple(bd.density, bd.origin, bd.dead);
      },
      py::arg("field"), py::arg("t"), py::arg("y"), py::arg("steps") = 100,
      "Transported density u_t(y) via backward-then-forward integration");
  m.def(
      "semigroup_discrepancy",
      [](const FieldSpec& f, double r, double s, double t, std::size_t particles,
         std::uint64_t seed, int steps) {
        return semigroup_discrepancy(f, r, s, t, particles, seed, steps);
      },
      py::arg("field"), py::arg("r"), py::arg("s"), py::arg("t"), py::arg("particles"),
      py::arg("seed"), py::arg("steps_per_segment") = 32);

  m.def(
      "commutator_eval",
      [](const py::function& v, const FieldSpec& c, double eps, const Vec& x, int gh_nodes) {
        const auto snap = snapshot(c, 0.0);
        const auto inner = make_inner_quadrature(c.dim, 0, gh_nodes);
        return commutator_eval(wrap_scalar(v), snap, eps, inner, x);
      },
      py::arg("v"), py::arg("field"), py::arg("eps"), py::arg("x"), py::arg("gh_nodes") = 20);

  m.def("set_thread_count", &set_thread_count);
  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_prefix) {
        RunOverrides ov;
        if (!out_prefix.empty()) ov.out_prefix = out_prefix;
        return run_experiment(config_path, ov);
      },
      py::arg("config_path"), py::arg("out_prefix") = "");
}

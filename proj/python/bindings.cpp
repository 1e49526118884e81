#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crisscross/crisscross.hpp"

namespace py = pybind11;
using namespace crisscross;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// NaN marks a missing value; indicators follow from it.
ObservedDataset to_dataset(const Array& x, const Array& y) {
  if (x.ndim() != 1 || y.ndim() != 1 || x.size() != y.size())
    throw DataError("x and y must be 1-d arrays of equal length");
  ObservedDataset d;
  auto xs = x.unchecked<1>();
  auto ys = y.unchecked<1>();
  for (py::ssize_t i = 0; i < x.size(); ++i) {
    std::optional<double> xv, yv;
    if (!std::isnan(xs(i))) xv = xs(i);
    if (!std::isnan(ys(i))) yv = ys(i);
    d.push_back(xv, yv);
  }
  return d;
}

py::dict simulate(std::size_t n, std::uint64_t seed, double quadratic) {
  ScenarioConfig sc;
  sc.n_total = n;
  sc.seed = seed;
  sc.mechanism = MissingnessMechanism::standard(quadratic);
  const auto d = simulate_dataset(sc).observed;
  py::dict out;
  out["x"] = py::array_t<double>(d.x.size(), d.x.data());
  out["y"] = py::array_t<double>(d.y.size(), d.y.data());
  out["r_x"] = py::array_t<std::uint8_t>(d.r_x.size(), d.r_x.data());
  out["r_y"] = py::array_t<std::uint8_t>(d.r_y.size(), d.r_y.data());
  return out;
}

py::dict pseudolik(const Array& x, const Array& y, int group_size) {
  const auto r = estimate_pseudolik(to_dataset(x, y), group_size);
  py::dict out;
  out["theta"] = r.theta_hat;
  out["se"] = r.se();
  out["sandwich_var"] = r.sandwich_var;
  out["converged"] = r.converged;
  out["n_complete"] = r.n_complete;
  out["n_total"] = r.n_total;
  return out;
}

py::dict gee(const Array& x, const Array& y, const std::string& weight, std::optional<double> alpha_known,
             double sigma2, bool quadratic_pi) {
  MethodSpec spec;
  spec.method = "gee";
  if (weight == "optimal")
    spec.weight = WeightKind::Optimal;
  else if (weight != "nonoptimal")
    throw ConfigError("weight must be 'nonoptimal' or 'optimal'");
  spec.alpha_known = alpha_known;
  spec.sigma2 = sigma2;
  spec.quadratic_pi = quadratic_pi;
  std::map<std::string, double> se;
  const auto est = estimate_point(to_dataset(x, y), spec, &se);
  py::dict out;
  out["estimate"] = est;
  out["se"] = se;
  return out;
}

py::dict identify(const std::string& name) {
  const CaseConfig c = builtin_case(name);
  const JacobianReport r = analyze_case(c);
  py::dict out;
  out["case"] = c.name;
  out["jacobian"] = r.j_matrix;
  out["parameters"] = r.param_names;
  out["rank"] = r.numerical_rank;
  out["full_rank"] = r.full_rank;
  out["singular_values"] = r.singular_values;
  out["sufficient_sets"] = r.sufficient_sets;
  return out;
}

py::dict counterexample(const std::string& variant) {
  CounterexampleOptions o;
  o.variant = parse_counterexample_variant(variant);
  const auto r = verify_counterexample(o);
  py::dict out;
  out["max_abs_discrepancy"] = r.max_abs_discrepancy;
  out["variance_y"] = r.variance_y;
  out["grid_points"] = r.grid_points;
  return out;
}

py::tuple conditional(double mu1, double mu2, double sigma1, double sigma2, double rho) {
  const auto c = derive_conditional(mu1, mu2, sigma1, sigma2, rho);
  return py::make_tuple(c.alpha, c.beta, c.sigma2);
}

std::string experiment(const std::string& config_json) {
  return summary_to_json(run_experiment(experiment_from_json(nlohmann::json::parse(config_json)))).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "criss-cross MNAR estimation core";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("derive_conditional", &conditional, py::arg("mu1"), py::arg("mu2"), py::arg("sigma1"), py::arg("sigma2"),
        py::arg("rho"));
  m.def("simulate", &simulate, py::arg("n"), py::arg("seed"), py::arg("quadratic") = 0.0);
  m.def("estimate_pseudolik", &pseudolik, py::arg("x"), py::arg("y"), py::arg("group_size") = 2);
  m.def("estimate_gee", &gee, py::arg("x"), py::arg("y"), py::arg("weight") = "nonoptimal",
        py::arg("alpha_known") = py::none(), py::arg("sigma2") = 8.19, py::arg("quadratic_pi") = false);
  m.def("identify", &identify, py::arg("case"));
  m.def("verify_counterexample", &counterexample, py::arg("variant") = "corrected");
  m.def("run_experiment_json", &experiment, py::arg("config_json"),
        "Run a replication study from a JSON config string; returns the JSON report.");
}

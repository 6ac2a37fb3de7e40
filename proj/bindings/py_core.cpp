#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mosaic/cardinality.hpp"
#include "mosaic/filter.hpp"
#include "mosaic/fusion.hpp"
#include "mosaic/gm.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/robust_fusion.hpp"
#include "mosaic/scenario.hpp"

namespace py = pybind11;
using namespace mosaic;

namespace {

std::vector<Eigen::Vector2d> to_points(
    const std::vector<std::array<double, 2>>& raw) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.emplace_back(p[0], p[1]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian-mixture CPHD/PHD multi-target tracking and "
            "field-of-view-robust fusion";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<GaussianComponent>(m, "GaussianComponent")
      .def(py::init([](double weight, const Vector& mean,
                       const Matrix& covariance) {
             GaussianComponent gc{weight, mean, covariance};
             validate_component(gc);
             return gc;
           }),
           py::arg("weight"), py::arg("mean"), py::arg("covariance"))
      .def_readwrite("weight", &GaussianComponent::weight)
      .def_readwrite("mean", &GaussianComponent::mean)
      .def_readwrite("covariance", &GaussianComponent::covariance)
      .def("__repr__", [](const GaussianComponent& gc) {
        return "GaussianComponent(weight=" + std::to_string(gc.weight) + ")";
      });

  py::class_<GMIntensity>(m, "GMIntensity")
      .def(py::init<>())
      .def(py::init([](const std::vector<GaussianComponent>& components) {
             return GMIntensity{components};
           }),
           py::arg("components"))
      .def_readwrite("components", &GMIntensity::components)
      .def("mass", &GMIntensity::mass)
      .def("__len__", &GMIntensity::size);

  py::class_<CardinalityDistribution>(m, "CardinalityDistribution")
      .def(py::init([](const std::vector<double>& probs) {
             return CardinalityDistribution{probs};
           }),
           py::arg("probs"))
      .def_static("delta", &CardinalityDistribution::delta, py::arg("n"),
                  py::arg("n_max") = kMaxTargets)
      .def_readwrite("probs", &CardinalityDistribution::probs);

  py::class_<BernoulliSet>(m, "BernoulliSet")
      .def(py::init([](const std::vector<double>& existence) {
             return BernoulliSet{existence};
           }),
           py::arg("existence"))
      .def_static("from_weights", &BernoulliSet::from_weights,
                  py::arg("weights"))
      .def_readwrite("existence", &BernoulliSet::existence);

  py::class_<IIDClusterDensity>(m, "IIDClusterDensity")
      .def(py::init<>())
      .def(py::init([](const CardinalityDistribution& cardinality,
                       const GMIntensity& intensity) {
             return IIDClusterDensity{cardinality, intensity};
           }),
           py::arg("cardinality"), py::arg("intensity"))
      .def_static("empty_density", &IIDClusterDensity::empty_density,
                  py::arg("n_max") = kMaxTargets)
      .def_readwrite("cardinality", &IIDClusterDensity::cardinality)
      .def_readwrite("intensity", &IIDClusterDensity::intensity);

  m.def("esf",
        [](const std::vector<double>& values, int degree) {
          return esf(values, degree);
        },
        py::arg("values"), py::arg("degree"));
  m.def("esf_all",
        [](const std::vector<double>& values) { return esf_all(values); },
        py::arg("values"));
  m.def("mb_cardinality", &mb_cardinality, py::arg("bernoullis"),
        py::arg("n_max") = kMaxTargets);
  m.def("convolve_cardinality", &convolve_cardinality, py::arg("ps"),
        py::arg("n_max") = kMaxTargets);
  m.def("expected_cardinality", &expected_cardinality, py::arg("p"));
  m.def("map_cardinality", &map_cardinality, py::arg("p"));
  m.def("poisson_cardinality", &poisson_cardinality, py::arg("mu"),
        py::arg("n_max") = kMaxTargets);

  m.def("gm_evaluate", &gm_evaluate, py::arg("intensity"), py::arg("x"));
  m.def("gm_reduce",
        py::overload_cast<const GMIntensity&, double, double, int>(&gm_reduce),
        py::arg("intensity"), py::arg("prune_threshold"),
        py::arg("merge_threshold"), py::arg("max_components"));

  m.def("corrected_mahalanobis", &corrected_mahalanobis, py::arg("a"),
        py::arg("b"));
  m.def("chi2_cdf", &chi2_cdf, py::arg("delta"), py::arg("dof"));

  m.def(
      "cluster_components",
      [](const std::vector<GMIntensity>& nodes, double rho) {
        const auto partition = cluster_components(nodes, rho);
        std::vector<std::vector<std::pair<int, int>>> out;
        for (const auto& cluster : partition.clusters) {
          std::vector<std::pair<int, int>> indices;
          for (const auto& idx : cluster) indices.emplace_back(idx.node, idx.comp);
          out.push_back(std::move(indices));
        }
        return out;
      },
      py::arg("nodes"), py::arg("rho"),
      "Cluster the pooled components of all nodes under the gating "
      "threshold; returns (node, component) index clusters.");

  m.def(
      "gci_fuse",
      [](const IIDClusterDensity& a, const IIDClusterDensity& b, double omega) {
        return gci_fuse(a, b, omega);
      },
      py::arg("a"), py::arg("b"), py::arg("omega") = 0.5);
  m.def(
      "aa_fuse",
      [](const IIDClusterDensity& a, const IIDClusterDensity& b, double omega) {
        return aa_fuse(a, b, omega);
      },
      py::arg("a"), py::arg("b"), py::arg("omega") = 0.5);
  m.def(
      "robust_fuse",
      [](const IIDClusterDensity& a, const IIDClusterDensity& b,
         const std::string& rule, double omega, double rho, int n_max) {
        const FusionRule r = rule == "aa" ? FusionRule::Aa : FusionRule::Gci;
        return robust_fuse(a, b, r, omega, rho, {}, n_max);
      },
      py::arg("a"), py::arg("b"), py::arg("rule") = "gci",
      py::arg("omega") = 0.5, py::arg("rho") = 20.0,
      py::arg("n_max") = kMaxTargets,
      "Clustering-based fusion robust to differing fields-of-view.");

  m.def(
      "ospa",
      [](const std::vector<std::array<double, 2>>& x,
         const std::vector<std::array<double, 2>>& y, double cutoff,
         double order) {
        return ospa(to_points(x), to_points(y), OspaParams{cutoff, order});
      },
      py::arg("x"), py::arg("y"), py::arg("cutoff") = 600.0,
      py::arg("order") = 1.0);

  m.def(
      "extract_estimates",
      [](const IIDClusterDensity& d) {
        std::vector<std::array<double, 2>> out;
        for (const auto& p : extract_estimates(d)) {
          out.push_back({p(0), p(1)});
        }
        return out;
      },
      py::arg("density"));

  m.def("load_scenario", &load_scenario, py::arg("path"),
        "Parse and hold a scenario file (raises ConfigError on problems).");
  m.def(
      "run_scenario",
      [](const std::string& path, const std::vector<std::string>& overrides,
         int threads) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open scenario file: " + path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        std::string text = buffer.str();
        for (const auto& kv : overrides) text = apply_override(text, kv);
        const ScenarioConfig config = parse_scenario(text);
        const std::vector<MethodSpec> methods{
            MethodSpec::from_run_config(config.run)};
        const ExperimentResult result = run_experiment(config, methods, threads);
        py::dict out;
        out["true_cardinality"] = result.true_cardinality;
        py::dict per_method;
        for (const auto& method : result.methods) {
          py::dict entry;
          entry["mean_ospa_per_scan"] = mean_over_runs(method.ospa_per_run);
          entry["mean_card_per_scan"] = mean_over_runs(method.card_per_run);
          entry["time_avg_ospa"] = time_average(method.ospa_per_run);
          per_method[method.method.c_str()] = entry;
        }
        out["methods"] = per_method;
        return out;
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("threads") = 1,
      "Run the configured Monte Carlo experiment and return aggregates.");
}

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "layercut/activation_store.hpp"
#include "layercut/cutoff_selector.hpp"
#include "layercut/error.hpp"
#include "layercut/report.hpp"
#include "layercut/sensitivity.hpp"
#include "layercut/similarity_matrix.hpp"

namespace py = pybind11;
using namespace layercut;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

FloatArray layer_array(const LayerActivations& layer) {
  FloatArray out({layer.samples(), layer.features()});
  std::copy(layer.values().begin(), layer.values().end(), out.mutable_data());
  return out;
}

ActivationSet set_from_arrays(const std::vector<FloatArray>& arrays) {
  std::vector<LayerActivations> layers;
  for (std::size_t l = 0; l < arrays.size(); ++l) {
    const auto& a = arrays[l];
    if (a.ndim() != 2) throw py::value_error("each layer must be a 2-D array");
    const auto n = static_cast<std::size_t>(a.shape(0));
    const auto d = static_cast<std::size_t>(a.shape(1));
    layers.emplace_back(l, n, d, std::vector<float>(a.data(), a.data() + n * d));
  }
  return ActivationSet(std::move(layers));
}

MetricConfig make_config(Metric metric, std::size_t k, double t, double eps) {
  MetricConfig cfg;
  cfg.metric = metric;
  cfg.k = k;
  cfg.t = t;
  cfg.eps = eps;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layer similarity analysis and cutoff selection";
  m.attr("__version__") = kToolVersion;

  // Message is "<ErrorCode name>: <detail>".
  py::register_exception<Error>(m, "LayercutError", PyExc_RuntimeError);

  py::enum_<Metric>(m, "Metric")
      .value("CKA", Metric::Cka)
      .value("JACCARD", Metric::Jaccard)
      .value("SVCCA", Metric::Svcca);

  py::enum_<Regime>(m, "Regime")
      .value("STRUCTURED", Regime::Structured)
      .value("CONSTANT", Regime::Constant)
      .value("NOISE", Regime::Noise);

  py::class_<ActivationSet>(m, "ActivationSet")
      .def(py::init(&set_from_arrays), py::arg("layers"))
      .def_property_readonly("layer_count", &ActivationSet::layer_count)
      .def_property_readonly("sample_count", &ActivationSet::sample_count)
      .def_property_readonly("feature_dims", &ActivationSet::feature_dims)
      .def("layer", [](const ActivationSet& s, std::size_t i) { return layer_array(s.layer(i)); })
      .def("__len__", &ActivationSet::layer_count)
      .def("__eq__", [](const ActivationSet& a, const ActivationSet& b) { return a == b; });

  m.def("read_container", &read_activation_container, py::arg("path"));
  m.def("write_container",
        py::overload_cast<const ActivationSet&, const std::filesystem::path&>(&write_activation_container),
        py::arg("set"), py::arg("path"));
  m.def("read_layer_csvs",
        [](const std::vector<std::filesystem::path>& paths) { return read_layer_csv(paths); },
        py::arg("paths"));

  m.def(
      "synthesize",
      [](Regime regime, std::size_t layers, std::size_t samples, std::vector<std::size_t> dims,
         std::size_t boundary, double epsilon, double phase_noise, std::uint64_t seed) {
        GeneratorSpec g;
        g.regime = regime;
        g.layers = layers;
        g.samples = samples;
        g.dims = std::move(dims);
        g.boundary = boundary;
        g.epsilon = epsilon;
        g.phase_noise = phase_noise;
        g.seed = seed;
        return synthesize_activations(g);
      },
      py::arg("regime") = Regime::Structured, py::arg("layers") = 12, py::arg("samples") = 200,
      py::arg("dims") = std::vector<std::size_t>{32}, py::arg("boundary") = 6,
      py::arg("epsilon") = 0.01, py::arg("phase_noise") = 0.1, py::arg("seed") = 0);

  m.def("cka", py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&>(&cka), py::arg("a"),
        py::arg("b"));
  m.def("jaccard_knn",
        py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&, std::size_t>(&jaccard_knn),
        py::arg("a"), py::arg("b"), py::arg("k") = 20);
  m.def("svcca",
        py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&, double, double, bool>(&svcca),
        py::arg("a"), py::arg("b"), py::arg("t") = 0.99, py::arg("eps") = 1e-12,
        py::arg("clamp") = true);

  m.def(
      "similarity_matrix",
      [](const ActivationSet& set, Metric metric, std::size_t k, double t, double eps, unsigned threads) {
        const auto cfg = make_config(metric, k, t, eps);
        py::gil_scoped_release release;
        return build_similarity_matrix(set, cfg, threads).values;
      },
      py::arg("set"), py::arg("metric") = Metric::Cka, py::arg("k") = 20, py::arg("t") = 0.99,
      py::arg("eps") = 1e-12, py::arg("threads") = 0);

  m.def("block_variability",
        [](const Eigen::MatrixXd& m) { return block_variability(m); }, py::arg("block"));

  m.def(
      "select_cutoff",
      [](const Eigen::MatrixXd& z) {
        const auto r = select_cutoff(z);
        py::list curve;
        for (const auto& s : r.curve) {
          curve.append(py::dict(py::arg("c") = s.cutoff, py::arg("delta_tl") = s.delta_tl,
                                py::arg("delta_br") = s.delta_br, py::arg("score") = s.score));
        }
        return py::dict(py::arg("c_star") = r.c_star, py::arg("degenerate") = r.degenerate,
                        py::arg("tie_count") = r.tie_count, py::arg("curve") = curve);
      },
      py::arg("z"));

  m.def(
      "run_sensitivity",
      [](const ActivationSet& set, std::vector<std::size_t> sizes, std::size_t repeats,
         std::uint64_t seed, Metric metric, std::size_t k, unsigned threads) {
        SensitivitySpec spec;
        spec.sizes = std::move(sizes);
        spec.repeats = repeats;
        spec.seed = seed;
        spec.metric = make_config(metric, k, 0.99, 1e-12);
        spec.threads = threads;
        SensitivityReport report;
        {
          py::gil_scoped_release release;
          report = run_sensitivity(set, spec);
        }
        return py::module_::import("json").attr("loads")(to_json(report).dump());
      },
      py::arg("set"), py::arg("sizes") = std::vector<std::size_t>{10, 25, 50, 75, 100, 250, 500, 1000},
      py::arg("repeats") = 10, py::arg("seed") = 0, py::arg("metric") = Metric::Cka, py::arg("k") = 20,
      py::arg("threads") = 0);
}

// pybind11 bindings for the imgbk core: dataset handling, analysis,
// synthetic generation, training, and metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "imgbk/analysis.hpp"
#include "imgbk/graph.hpp"
#include "imgbk/metrics.hpp"
#include "imgbk/model.hpp"
#include "imgbk/synthgen.hpp"
#include "imgbk/training.hpp"

namespace py = pybind11;
using namespace imgbk;

namespace {

Tensor tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D float array");
  Tensor t(arr.shape(0), arr.shape(1));
  std::copy(arr.data(), arr.data() + t.size(), t.data());
  return t;
}

py::array_t<double> tensor_to_numpy(const Tensor& t) {
  py::array_t<double> arr({t.rows(), t.cols()});
  std::copy(t.data(), t.data() + t.size(), arr.mutable_data());
  return arr;
}

ModelConfig model_config_from_kwargs(const Graph& g, const std::string& model,
                                     const std::string& loss, std::int64_t hidden, double lambda,
                                     double epsilon, double tau) {
  ModelConfig cfg;
  cfg.layer_sizes = {g.feature_dim(), hidden, g.n_classes};
  if (model == "gcn") cfg.gate_mode = GateMode::None;
  else if (model == "gbk" || model == "im-gbk") cfg.gate_mode = GateMode::Learned;
  else if (model == "fast-im-gbk") cfg.gate_mode = GateMode::Fast;
  else throw std::invalid_argument("unknown model: " + model);
  if (loss == "ce") cfg.loss_kind = LossKind::CrossEntropy;
  else if (loss == "reweight") cfg.loss_kind = LossKind::ReweightedCE;
  else if (loss == "logit-adj") cfg.loss_kind = LossKind::LogitAdjusted;
  else if (loss == "balanced") cfg.loss_kind = LossKind::BalancedSoftmax;
  else throw std::invalid_argument("unknown loss: " + loss);
  cfg.lambda = lambda;
  cfg.epsilon = epsilon;
  cfg.tau = tau;
  cfg.validate();
  return cfg;
}

py::dict metrics_to_dict(const MetricsReport& rep) {
  py::dict d;
  d["accuracy"] = rep.accuracy;
  d["macro_f1"] = rep.macro_f1;
  d["auc_ovr_macro"] = rep.auc_ovr_macro;
  d["confusion"] = rep.confusion;
  d["per_class_f1"] = rep.per_class_f1;
  d["n"] = rep.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Imbalanced node classification with gated bi-kernel message passing";

  py::class_<Graph>(m, "Graph")
      .def_readonly("n_nodes", &Graph::n_nodes)
      .def_readonly("n_edges", &Graph::n_edges)
      .def_readonly("n_classes", &Graph::n_classes)
      .def_readonly("csr_offsets", &Graph::csr_offsets)
      .def_readonly("csr_neighbors", &Graph::csr_neighbors)
      .def_readonly("labels", &Graph::labels)
      .def_property_readonly("features",
                             [](const Graph& g) { return tensor_to_numpy(g.features); })
      .def_property_readonly("n_edge_directions", &Graph::n_edge_directions)
      .def("degree", &Graph::degree, py::arg("node"));

  py::class_<SplitMasks>(m, "SplitMasks")
      .def_readonly("train", &SplitMasks::train)
      .def_readonly("val", &SplitMasks::val)
      .def_readonly("test", &SplitMasks::test)
      .def("count_train", &SplitMasks::count_train)
      .def("count_val", &SplitMasks::count_val)
      .def("count_test", &SplitMasks::count_test);

  py::class_<DatasetBundle>(m, "DatasetBundle")
      .def_readonly("graph", &DatasetBundle::graph)
      .def_readonly("masks", &DatasetBundle::masks)
      .def_readonly("name", &DatasetBundle::name)
      .def_readonly("provenance", &DatasetBundle::provenance);

  m.def(
      "build_graph",
      [](const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         const std::vector<std::int32_t>& labels) {
        return build_graph(edges, tensor_from_numpy(features), labels);
      },
      py::arg("edges"), py::arg("features"), py::arg("labels"));

  m.def("load_dataset", &load_dataset, py::arg("dir"));
  m.def("save_dataset", &save_dataset, py::arg("bundle"), py::arg("dir"));
  m.def("validate_graph", &validate_graph, py::arg("graph"));

  m.def(
      "split_random",
      [](const Graph& g, double train, double val, double test, std::uint64_t seed) {
        return split_random(g, {train, val, test}, seed);
      },
      py::arg("graph"), py::arg("train") = 0.6, py::arg("val") = 0.2, py::arg("test") = 0.2,
      py::arg("seed") = 0);
  m.def("make_extreme_split", &make_extreme_split, py::arg("graph"), py::arg("masks"),
        py::arg("minority_classes"), py::arg("k") = 5, py::arg("seed") = 0);

  m.def("class_counts", &class_counts);
  m.def("imbalance_ratio", &imbalance_ratio);
  m.def(
      "class_homophily",
      [](const Graph& g, std::int32_t y) { return class_homophily(g, y, nullptr); },
      py::arg("graph"), py::arg("label"));
  m.def("graph_homophily", &graph_homophily, py::arg("graph"));
  m.def(
      "profile",
      [](const DatasetBundle& bundle) {
        ClassStats s = profile(bundle);
        py::dict d;
        d["counts"] = s.counts;
        d["class_homophily"] = s.class_homophily;
        d["imbalance_ratio"] = s.imbalance_ratio;
        d["graph_homophily"] = s.graph_homophily;
        d["node_homophily"] = s.node_homophily;
        d["class_mean_homophily"] = s.class_mean_homophily;
        d["isolated_nodes"] = s.isolated_nodes;
        return d;
      },
      py::arg("bundle"));

  m.def(
      "sbm_generate",
      [](const std::vector<std::int64_t>& class_sizes, const std::vector<double>& p_in,
         double p_out, std::int64_t feature_dim, double class_mean_separation, double noise_std,
         std::uint64_t seed, const std::string& name) {
        SbmSpec spec;
        spec.class_sizes = class_sizes;
        spec.p_in = p_in;
        spec.p_out = p_out;
        spec.feature_dim = feature_dim;
        spec.class_mean_separation = class_mean_separation;
        spec.noise_std = noise_std;
        spec.seed = seed;
        spec.name = name;
        return sbm_generate(spec);
      },
      py::arg("class_sizes"), py::arg("p_in"), py::arg("p_out"), py::arg("feature_dim") = 16,
      py::arg("class_mean_separation") = 1.0, py::arg("noise_std") = 1.0, py::arg("seed") = 0,
      py::arg("name") = "sbm");
  m.def(
      "expected_homophily",
      [](const std::vector<std::int64_t>& class_sizes, const std::vector<double>& p_in,
         double p_out) {
        SbmSpec spec;
        spec.class_sizes = class_sizes;
        spec.p_in = p_in;
        spec.p_out = p_out;
        return expected_homophily(spec);
      },
      py::arg("class_sizes"), py::arg("p_in"), py::arg("p_out"));

  m.def(
      "fast_gate_table",
      [](const Graph& g, const SplitMasks& masks, double epsilon, bool train_only) {
        GateTable t = fast_gate_table(g, masks, epsilon, train_only);
        py::dict d;
        d["alpha"] = t.alpha;
        d["fallback_homophily"] = t.fallback_homophily;
        return d;
      },
      py::arg("graph"), py::arg("masks"), py::arg("epsilon") = 0.1,
      py::arg("train_only_homophily") = true);

  m.def(
      "train",
      [](const DatasetBundle& bundle, const std::string& model, const std::string& loss,
         std::int64_t hidden, double lambda, double epsilon, double tau, std::int64_t epochs,
         double lr, double weight_decay, std::int64_t patience, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.model = model_config_from_kwargs(bundle.graph, model, loss, hidden, lambda, epsilon, tau);
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.weight_decay = weight_decay;
        cfg.early_stop_patience = patience;
        cfg.seed = seed;
        TrainResult res = train(bundle, cfg);
        MetricsReport val = evaluate(res.params, bundle, cfg.model, bundle.masks.val);
        MetricsReport test = evaluate(res.params, bundle, cfg.model, bundle.masks.test);
        py::dict d;
        d["best_epoch"] = res.history.best_epoch;
        d["epochs_run"] = res.history.records.size();
        std::vector<double> losses;
        for (const auto& r : res.history.records) losses.push_back(r.train_loss);
        d["train_loss"] = losses;
        d["val"] = metrics_to_dict(val);
        d["test"] = metrics_to_dict(test);
        return d;
      },
      py::arg("bundle"), py::arg("model") = "gcn", py::arg("loss") = "ce",
      py::arg("hidden") = 64, py::arg("lambda") = 1.0, py::arg("epsilon") = 0.1,
      py::arg("tau") = 1.0, py::arg("epochs") = 200, py::arg("lr") = 1e-3,
      py::arg("weight_decay") = 5e-4, py::arg("patience") = 50, py::arg("seed") = 0);

  m.def(
      "accuracy",
      [](const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& truth) {
        return accuracy(pred, truth);
      },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "macro_f1",
      [](const std::vector<std::int32_t>& pred, const std::vector<std::int32_t>& truth,
         std::int32_t n_classes) { return macro_f1(pred, truth, n_classes); },
      py::arg("pred"), py::arg("truth"), py::arg("n_classes"));
  m.def(
      "auc_ovr_macro",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
         const std::vector<std::int32_t>& truth) {
        return auc_ovr_macro(tensor_from_numpy(scores), truth, nullptr);
      },
      py::arg("scores"), py::arg("truth"));

  m.attr("__version__") = "0.1.0";
}

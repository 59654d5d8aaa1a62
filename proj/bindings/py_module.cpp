#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gspn/checkpoint.hpp"
#include "gspn/cli.hpp"
#include "gspn/dataset_io.hpp"
#include "gspn/masking.hpp"
#include "gspn/queries.hpp"
#include "gspn/readout.hpp"
#include "gspn/synthetic.hpp"

namespace py = pybind11;
using namespace gspn;

namespace {

AttributeSchema schema_from_list(const py::list& kinds) {
  AttributeSchema schema;
  for (const auto& item : kinds) {
    const std::string s = py::cast<std::string>(item);
    if (s == "continuous") {
      schema.attributes.push_back(AttributeKind::continuous());
    } else if (s.rfind("categorical:", 0) == 0) {
      schema.attributes.push_back(AttributeKind::categorical(std::stoi(s.substr(12))));
    } else {
      throw py::value_error("attribute kind must be 'continuous' or 'categorical:K'");
    }
  }
  schema.validate();
  return schema;
}

py::list schema_to_list(const AttributeSchema& schema) {
  py::list out;
  for (const auto& a : schema.attributes) {
    out.append(a.is_categorical() ? "categorical:" + std::to_string(a.arity)
                                  : std::string("continuous"));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_gspn, m) {
  m.doc() = "Sum-product network hierarchies over graph-induced computational trees";

  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<ImpossibleEvidenceError>(m, "ImpossibleEvidenceError");

  py::class_<Graph>(m, "Graph")
      .def(py::init([](int n, const std::vector<std::pair<int, int>>& edges,
                       const Eigen::MatrixXd& attributes,
                       const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask,
                       std::optional<int> label) {
             Graph g;
             g.num_vertices = n;
             g.edges = edges;
             g.attributes = attributes;
             g.mask = mask;
             g.label = label;
             return g;
           }),
           py::arg("num_vertices"), py::arg("edges"), py::arg("attributes"), py::arg("mask"),
           py::arg("label") = std::nullopt)
      .def_readonly("num_vertices", &Graph::num_vertices)
      .def_readonly("edges", &Graph::edges)
      .def_readonly("attributes", &Graph::attributes)
      .def_readonly("mask", &Graph::mask)
      .def_readonly("label", &Graph::label)
      .def("in_neighbors", [](const Graph& g, int v) { return in_neighbors(g, v); })
      .def("__eq__",
           [](const Graph& a, const Graph& b) { return semantically_equal(a, b); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const py::list& schema, std::vector<Graph> graphs,
                       std::optional<int> num_classes) {
             Dataset ds;
             ds.schema = schema_from_list(schema);
             ds.graphs = std::move(graphs);
             ds.num_classes = num_classes;
             ds.validate();
             return ds;
           }),
           py::arg("schema"), py::arg("graphs"), py::arg("num_classes") = std::nullopt)
      .def_property_readonly("schema", [](const Dataset& ds) { return schema_to_list(ds.schema); })
      .def_readonly("graphs", &Dataset::graphs)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def("__len__", [](const Dataset& ds) { return ds.graphs.size(); })
      .def("__eq__",
           [](const Dataset& a, const Dataset& b) { return semantically_equal(a, b); });

  py::class_<GspnConfig>(m, "GspnConfig")
      .def(py::init<>())
      .def_readwrite("num_layers", &GspnConfig::num_layers)
      .def_readwrite("num_states", &GspnConfig::num_states)
      .def_readwrite("shortcut", &GspnConfig::shortcut)
      .def_readwrite("learning_rate", &GspnConfig::learning_rate)
      .def_readwrite("batch_size", &GspnConfig::batch_size)
      .def_readwrite("epochs", &GspnConfig::epochs)
      .def_readwrite("patience", &GspnConfig::patience)
      .def_readwrite("seed", &GspnConfig::seed);

  py::enum_<Pooling>(m, "Pooling")
      .value("Mean", Pooling::Mean)
      .value("Sum", Pooling::Sum);

  py::class_<ReadoutConfig>(m, "ReadoutConfig")
      .def(py::init<>())
      .def_readwrite("num_states", &ReadoutConfig::num_states)
      .def_readwrite("pooling", &ReadoutConfig::pooling)
      .def_readwrite("learning_rate", &ReadoutConfig::learning_rate)
      .def_readwrite("epochs", &ReadoutConfig::epochs)
      .def_readwrite("patience", &ReadoutConfig::patience);

  py::enum_<SupervisedMode>(m, "SupervisedMode")
      .value("Joint", SupervisedMode::Joint)
      .value("Frozen", SupervisedMode::Frozen);

  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("best_epoch", &TrainHistory::best_epoch)
      .def_property_readonly("train_pll",
                             [](const TrainHistory& h) {
                               std::vector<double> out;
                               for (const auto& e : h.epochs) out.push_back(e.train_pll);
                               return out;
                             })
      .def_property_readonly("val_pll", [](const TrainHistory& h) {
        std::vector<double> out;
        for (const auto& e : h.epochs) out.push_back(e.val_pll);
        return out;
      });

  py::class_<MissingNll>(m, "MissingNll")
      .def_readonly("per_vertex_mean", &MissingNll::per_vertex_mean)
      .def_readonly("per_attribute_mean", &MissingNll::per_attribute_mean)
      .def_readonly("per_vertex", &MissingNll::per_vertex)
      .def_readonly("vertices", &MissingNll::vertices)
      .def_readonly("entries", &MissingNll::entries);

  py::class_<PerturbationResult>(m, "PerturbationResult")
      .def_readonly("vertex", &PerturbationResult::vertex)
      .def_readonly("attribute", &PerturbationResult::attribute)
      .def_readonly("delta_pll", &PerturbationResult::delta_pll)
      .def_readonly("hop_distance", &PerturbationResult::hop_distance);

  py::class_<GspnModel>(m, "GspnModel")
      .def_property_readonly("num_layers", [](const GspnModel& m_) { return m_.L(); })
      .def_property_readonly("num_states", [](const GspnModel& m_) { return m_.C(); })
      .def_property_readonly("schema",
                             [](const GspnModel& m_) { return schema_to_list(m_.schema); })
      .def("pseudo_log_likelihood",
           [](const GspnModel& m_, const Graph& g) {
             const PseudoLogLik pll = pseudo_log_likelihood(g, m_);
             return py::make_tuple(pll.per_vertex, pll.total);
           })
      .def("posteriors",
           [](const GspnModel& m_, const Graph& g) { return forward_pass(g, m_).h; })
      .def("embeddings",
           [](const GspnModel& m_, const Graph& g) { return vertex_embeddings(g, m_); })
      .def("missing_nll",
           [](const GspnModel& m_, const Dataset& ds) { return missing_nll(ds, m_); })
      .def("impute",
           [](const GspnModel& m_, const Dataset& ds) { return impute(ds, m_); })
      .def("perturb",
           [](const GspnModel& m_, const Graph& g, int vertex, int attribute, double value) {
             return perturbation_query(g, m_, vertex, attribute, value);
           },
           py::arg("graph"), py::arg("vertex"), py::arg("attribute"), py::arg("value"))
      .def("predict",
           [](const GspnModel& m_, const Graph& g) { return graph_predict(g, m_); })
      .def("save", [](const GspnModel& m_, const std::string& path) {
        save_checkpoint(m_, path);
      });

  py::class_<MixtureParams>(m, "MixtureParams")
      .def_readonly("weights", &MixtureParams::weights)
      .def("missing_nll", [](const MixtureParams& p, const Dataset& ds) {
        return baseline_missing_nll(p, ds);
      })
      .def("save", [](const MixtureParams& p, const py::list& schema, const std::string& kind,
                      const std::string& path) {
        save_baseline_checkpoint(p, schema_from_list(schema), kind, path);
      });

  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("apply_missing_mask", &apply_missing_mask, py::arg("dataset"), py::arg("concentration"),
        py::arg("rate"), py::arg("seed"));
  m.def("synth_community_graphs", &synth_community_graphs, py::arg("num_graphs"),
        py::arg("vertices_per_graph"), py::arg("num_communities"), py::arg("noise"),
        py::arg("seed"));
  m.def(
      "train_unsupervised",
      [](const Dataset& ds, const GspnConfig& cfg) {
        TrainHistory history;
        GspnModel model = train_unsupervised(ds, cfg, &history);
        return py::make_tuple(std::move(model), history);
      },
      py::arg("dataset"), py::arg("config"));
  m.def(
      "train_supervised",
      [](const Dataset& ds, const GspnConfig& cfg, const ReadoutConfig& rcfg,
         SupervisedMode mode) { return train_supervised(ds, cfg, rcfg, mode); },
      py::arg("dataset"), py::arg("config"), py::arg("readout"), py::arg("mode"));
  m.def("fit_gaussian", &fit_gaussian, py::arg("dataset"));
  m.def(
      "fit_gmm",
      [](const Dataset& ds, int num_states, int max_iters, double tol, std::uint64_t seed) {
        return fit_gmm(ds, num_states, max_iters, tol, seed);
      },
      py::arg("dataset"), py::arg("num_states"), py::arg("max_iters") = 200,
      py::arg("tol") = 1e-7, py::arg("seed") = 0);
  m.def("load_model", &load_gspn_checkpoint, py::arg("path"));
  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); },
      py::arg("args"));

  m.attr("__version__") = "0.1.0";
}

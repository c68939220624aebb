// Python bindings: matrices cross the boundary as 2-D float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "igs/errors.hpp"
#include "igs/gcn.hpp"
#include "igs/graphdata.hpp"
#include "igs/harness.hpp"
#include "igs/masking.hpp"
#include "igs/summation.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
namespace gd = igs::graphdata;
namespace hn = igs::harness;
namespace mk = igs::masking;
using igs::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw igs::ConfigError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), a.mutable_data());
  return a;
}

py::dict dataset_dict(const gd::GraphDataset& ds) {
  py::list adjacency, features;
  std::vector<std::size_t> labels;
  for (const auto& g : ds.graphs) {
    adjacency.append(to_array(g.adjacency));
    features.append(to_array(g.features));
    labels.push_back(g.label);
  }
  py::dict d;
  d["adjacency"] = adjacency;
  d["features"] = features;
  d["labels"] = labels;
  d["num_classes"] = ds.num_classes;
  d["subnetworks"] = ds.subnetworks ? py::cast(*ds.subnetworks) : py::none();
  d["planted_edges"] = ds.planted_edges ? py::cast(*ds.planted_edges) : py::none();
  return d;
}

py::dict summary_dict(const hn::SummaryRow& r) {
  py::dict d;
  d["method"] = r.method;
  d["runs"] = r.runs;
  d["mean_test_acc"] = r.mean_test_acc;
  d["std_test_acc"] = r.std_test_acc;
  d["mean_sparsity_percent"] = 100.0 * r.mean_sparsity;
  d["average_rank"] = r.average_rank;
  return d;
}

py::list summary_list(const std::vector<hn::SummaryRow>& rows) {
  py::list out;
  for (const auto& r : rows) out.append(summary_dict(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_igs, m) {
  m.doc() = "Iterative gradient-based sparsification of brain graphs";

  py::register_exception<igs::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<igs::IngestionError>(m, "IngestionError", PyExc_IOError);
  py::register_exception<igs::ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<igs::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("normalize_adjacency", [](const Array& a) { return to_array(igs::gcn::normalize_adjacency(to_matrix(a))); },
        py::arg("adjacency"), "D^-1/2 (A + I) D^-1/2; degrees are 1 plus the absolute off-diagonal row sums.");

  m.def("soft_mask", [](const Array& phi) { return to_array(mk::soft_mask(to_matrix(phi))); },
        py::arg("phi"), "sigma(Phi^T + Phi).");

  m.def(
      "binarize_mask",
      [](const Array& scores, const Array& support, double percent) {
        const Matrix s = to_matrix(support);
        return to_array(mk::binarize_mask(to_matrix(scores), mk::BinaryMask::support_of(s), percent).indicator);
      },
      py::arg("scores"), py::arg("support"), py::arg("percent"),
      "Drop the lowest-scoring percent of the support's edges; returns a 0/1 matrix.");

  m.def("removal_count", &mk::removal_count, py::arg("support_size"), py::arg("percent"));

  m.def("exact_sum", [](const std::vector<double>& terms) { return igs::exact_sum(terms); },
        py::arg("terms"), "Correctly rounded sum.");

  m.def(
      "generate_synthetic",
      [](std::size_t nodes, std::size_t graphs, std::size_t subnetworks, std::size_t block_a,
         std::size_t block_b, double shift, double noise, std::uint64_t seed) {
        gd::SyntheticConfig c{nodes, graphs, subnetworks, block_a, block_b, shift, noise};
        return dataset_dict(gd::generate_synthetic(c, seed));
      },
      py::arg("nodes") = 20, py::arg("graphs") = 200, py::arg("subnetworks") = 4, py::arg("block_a") = 0,
      py::arg("block_b") = 1, py::arg("shift") = 0.4, py::arg("noise") = 0.3, py::arg("seed") = 0);

  m.def(
      "write_synthetic",
      [](const fs::path& out, std::size_t nodes, std::size_t graphs, std::size_t subnetworks,
         std::size_t block_a, std::size_t block_b, double shift, double noise, std::uint64_t seed) {
        gd::SyntheticConfig c{nodes, graphs, subnetworks, block_a, block_b, shift, noise};
        gd::write_dataset(gd::generate_synthetic(c, seed), out);
        return out / "manifest.json";
      },
      py::arg("out"), py::arg("nodes") = 20, py::arg("graphs") = 200, py::arg("subnetworks") = 4,
      py::arg("block_a") = 0, py::arg("block_b") = 1, py::arg("shift") = 0.4, py::arg("noise") = 0.3,
      py::arg("seed") = 0, "Write a synthetic cohort as a manifest directory; returns the manifest path.");

  m.def("load_dataset", [](const fs::path& manifest) { return dataset_dict(gd::ingest_dataset(manifest)); },
        py::arg("manifest"));

  m.def(
      "resolve_plan",
      [](const std::string& json_text, const fs::path& base_dir) {
        const auto plan = hn::parse_plan(json_text, base_dir);
        plan.validate();
        return hn::plan_to_json(plan);
      },
      py::arg("json_text"), py::arg("base_dir") = fs::path(),
      "Validate a JSON plan and return it with every default filled in.");

  m.def(
      "run_plan",
      [](const std::string& json_text, const fs::path& base_dir) {
        auto plan = hn::parse_plan(json_text, base_dir);
        hn::SuiteResult result;
        {
          py::gil_scoped_release release;
          result = hn::run_experiment_suite(plan);
        }
        return summary_list(result.summary);
      },
      py::arg("json_text"), py::arg("base_dir") = fs::path(),
      "Run an experiment plan; returns the summary rows.");

  m.def("emit_reports", [](const fs::path& dir) { return summary_list(hn::emit_reports(dir)); },
        py::arg("output_dir"), "Rebuild reports from the run directories; returns the summary rows.");

  m.def(
      "subnetwork_aggregate",
      [](const Array& values, const std::vector<std::string>& map) {
        const auto agg = hn::subnetwork_aggregate(to_matrix(values), map);
        return py::make_tuple(agg.names, to_array(agg.values));
      },
      py::arg("values"), py::arg("subnetworks"),
      "Mean of values over node pairs spanning each pair of subnetworks; returns (names, matrix).");
}

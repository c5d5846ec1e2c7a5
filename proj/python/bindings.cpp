#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cwerm/pipeline.hpp"

namespace py = pybind11;
using namespace cwerm;

namespace {

using FloatArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const FloatArray& x) {
  if (x.ndim() != 2) throw dimension_mismatch("features must be a 2-D array");
  const auto rows = static_cast<std::size_t>(x.shape(0));
  const auto cols = static_cast<std::size_t>(x.shape(1));
  return Matrix(rows, cols, std::vector<double>(x.data(), x.data() + rows * cols));
}

LabeledDataset to_dataset(const FloatArray& x, const IntArray& y) {
  LabeledDataset ds;
  ds.features = to_matrix(x);
  if (y.ndim() != 1 || static_cast<std::size_t>(y.shape(0)) != ds.features.rows()) {
    throw dimension_mismatch("labels must be a 1-D array with one entry per row");
  }
  int k = 0;
  for (py::ssize_t i = 0; i < y.shape(0); ++i) {
    const auto label = y.data()[i];
    if (label < 0) throw invalid_argument("labels must be non-negative");
    ds.labels.push_back(static_cast<int>(label));
    ds.ids.push_back(static_cast<SampleId>(i));
    k = std::max(k, static_cast<int>(label) + 1);
  }
  ds.class_count = k;
  ds.validate(false);
  return ds;
}

py::tuple from_dataset(const LabeledDataset& ds) {
  FloatArray x({ds.size(), ds.dim()});
  std::copy(ds.features.values().begin(), ds.features.values().end(), x.mutable_data());
  IntArray y(static_cast<py::ssize_t>(ds.size()));
  IntArray ids(static_cast<py::ssize_t>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    y.mutable_data()[i] = ds.labels[i];
    ids.mutable_data()[i] = ds.ids[i];
  }
  return py::make_tuple(x, y, ids);
}

RunConfig config_from(const std::string& text) {
  Json j;
  try {
    j = text.empty() ? Json::object() : Json::parse(text);
  } catch (const Json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

std::pair<LabeledDataset, LabeledDataset> splits_for(const RunConfig& cfg) {
  return split_train_test(materialize_dataset(cfg.data), cfg.data);
}

}  // namespace

PYBIND11_MODULE(_cwerm, m) {
  m.doc() = "Coreset-restricted meta-reweighting for noisy-label training";

  static py::exception<Error> base(m, "CwermError", PyExc_RuntimeError);
  static py::exception<Error> config(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      if (e.kind() == ErrorKind::kConfig) {
        py::set_error(config, msg.c_str());
      } else {
        py::set_error(base, msg.c_str());
      }
    }
  });

  m.attr("REPORT_SCHEMA") = kReportSchema;

  m.def(
      "make_blobs",
      [](int k, std::size_t n_per_class, std::size_t dim, double separation, double spread, std::uint64_t seed) {
        return from_dataset(make_blobs(k, n_per_class, dim, separation, spread, seed));
      },
      py::arg("k"), py::arg("n_per_class"), py::arg("dim"), py::arg("separation"), py::arg("spread"),
      py::arg("seed"), "Gaussian blobs as (features, labels, ids).");

  m.def(
      "make_two_moons",
      [](std::size_t n, double noise_std, std::uint64_t seed) {
        return from_dataset(make_two_moons(n, noise_std, seed));
      },
      py::arg("n"), py::arg("noise_std"), py::arg("seed"), "Two interleaved half circles as (features, labels, ids).");

  m.def(
      "select_moderate",
      [](const FloatArray& x, const IntArray& y, double ratio) {
        return select_moderate(to_dataset(x, y), ratio).indices;
      },
      py::arg("features"), py::arg("labels"), py::arg("ratio"),
      "Row indices of the per-class moderate coreset, ascending.");

  m.def(
      "select_random",
      [](const FloatArray& x, const IntArray& y, double ratio, std::uint64_t seed) {
        return select_random(to_dataset(x, y), ratio, seed).indices;
      },
      py::arg("features"), py::arg("labels"), py::arg("ratio"), py::arg("seed"),
      "Row indices of a per-class uniform random coreset, ascending.");

  m.def(
      "broadcast_weights",
      [](const FloatArray& x, std::vector<std::size_t> indices, std::vector<double> weights) {
        CoresetSelection sel;
        sel.indices = std::move(indices);
        const Matrix features = to_matrix(x);
        check_selection(sel, features.rows());
        CoresetWeights cw;
        cw.indices = sel.indices;
        cw.weights = std::move(weights);
        const BroadcastWeights b = broadcast_weights(features, sel, cw);
        return py::make_tuple(b.w_star, b.source_index);
      },
      py::arg("features"), py::arg("indices"), py::arg("weights"),
      "Nearest-coreset-member weights for every row as (weights, source_index).");

  m.def(
      "validate_config", [](const std::string& text) { return to_json(config_from(text)).dump(); },
      py::arg("config_json"), "Parses a run configuration and returns it with defaults filled in.");

  m.def(
      "run",
      [](const std::string& text, const std::string& method, std::uint64_t seed) {
        const RunConfig cfg = config_from(text);
        const auto [train, test] = splits_for(cfg);
        py::gil_scoped_release release;
        return to_json(run_method(method_arm_from_string(method), train, test, cfg, seed)).dump();
      },
      py::arg("config_json"), py::arg("method"), py::arg("seed"), "Runs one method arm; returns report JSON.");

  m.def(
      "sweep",
      [](const std::string& text) {
        const RunConfig cfg = config_from(text);
        const auto [train, test] = splits_for(cfg);
        py::gil_scoped_release release;
        return to_json(ratio_sweep(train, test, cfg.harness.ratios, cfg.harness.seeds, cfg)).dump();
      },
      py::arg("config_json"), "Coreset-ratio sweep over harness.ratios and harness.seeds; returns report JSON.");

  m.def(
      "compare",
      [](const std::string& text) {
        const RunConfig cfg = config_from(text);
        const auto [train, test] = splits_for(cfg);
        py::gil_scoped_release release;
        return to_json(compare(train, test, cfg.harness.arms, cfg.harness.seeds, cfg)).dump();
      },
      py::arg("config_json"), "Compares harness.arms over harness.seeds; returns report JSON.");
}

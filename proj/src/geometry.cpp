#include "cwerm/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace cwerm {

double median_of(std::vector<double> values) {
  if (values.empty()) throw invalid_argument("median of an empty sequence");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

ClassMedians class_medians(const LabeledDataset& ds) {
  const auto groups = ds.indices_by_class();
  ClassMedians out;
  out.class_count = ds.class_count;
  out.medians = Matrix(groups.size(), ds.dim());
  std::vector<double> column;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) {
      throw invalid_argument("class " + std::to_string(c) + " has no samples; median undefined");
    }
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      column.clear();
      for (const std::size_t i : groups[c]) column.push_back(ds.features(i, j));
      out.medians(c, j) = median_of(column);
    }
  }
  return out;
}

DistanceScores median_distance_scores(const LabeledDataset& ds, const ClassMedians& medians) {
  if (medians.class_count != ds.class_count || medians.medians.cols() != ds.dim()) {
    throw dimension_mismatch("class medians do not match the dataset");
  }
  DistanceScores out;
  out.distance.resize(ds.size());
  std::vector<std::vector<double>> per_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    out.distance[i] = std::sqrt(squared_distance(ds.features.row(i), medians.medians.row(c)));
    per_class[c].push_back(out.distance[i]);
  }
  out.per_class_median_distance.reserve(per_class.size());
  for (auto& values : per_class) {
    out.per_class_median_distance.push_back(values.empty() ? 0.0 : median_of(std::move(values)));
  }
  return out;
}

std::vector<std::size_t> nearest_in_set(const Matrix& queries, const Matrix& refs) {
  if (refs.rows() == 0) throw Error(ErrorKind::kEmptyInput, "nearest_in_set: empty reference set");
  if (queries.cols() != refs.cols()) {
    throw dimension_mismatch("nearest_in_set: query and reference dimensions differ");
  }
  std::vector<std::size_t> nearest(queries.rows(), 0);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto query = queries.row(q);
    double best = squared_distance(query, refs.row(0));
    std::size_t best_index = 0;
    for (std::size_t r = 1; r < refs.rows(); ++r) {
      const double dist = squared_distance(query, refs.row(r));
      if (dist < best) {
        best = dist;
        best_index = r;
      }
    }
    nearest[q] = best_index;
  }
  return nearest;
}

}  // namespace cwerm

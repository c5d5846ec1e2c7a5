#pragma once

#include <span>
#include <vector>

#include "cwerm/data.hpp"

namespace cwerm {

/// Row c holds the coordinate-wise median of the features labelled c.
struct ClassMedians {
  Matrix medians;
  int class_count = 0;
};

struct DistanceScores {
  std::vector<double> distance;                   // per sample: ||z_i - median_{y_i}||
  std::vector<double> per_class_median_distance;  // per class: median of the above
};

/// Median of a sequence; even counts use the mean of the two middle values.
double median_of(std::vector<double> values);

ClassMedians class_medians(const LabeledDataset& ds);

DistanceScores median_distance_scores(const LabeledDataset& ds, const ClassMedians& medians);

/// For every query row, the index of the closest reference row (Euclidean).
/// Exact brute force; equal squared distances resolve to the lowest index.
std::vector<std::size_t> nearest_in_set(const Matrix& queries, const Matrix& refs);

}  // namespace cwerm

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwerm/reweight.hpp"

namespace cwerm {

/// Full-dataset weights inherited from the nearest coreset member.
struct BroadcastWeights {
  std::vector<double> w_star;
  std::vector<std::size_t> source_index;  // dataset row index of the coreset member inherited from
  std::string space = "featurized";
};

/// `features` must be the matrix the selection was scored on.
BroadcastWeights broadcast_weights(const Matrix& features, const CoresetSelection& selection,
                                   const CoresetWeights& coreset_weights, std::string space = "featurized");

/// CSV with header `id,weight,source_coreset_index`; `ids` aligned with the rows.
void write_weights_csv(const BroadcastWeights& weights, std::span<const SampleId> ids,
                       const std::filesystem::path& path);

struct WeightsTable {
  std::vector<SampleId> ids;
  std::vector<double> weights;
  std::vector<std::size_t> source_index;
};

WeightsTable read_weights_csv(const std::filesystem::path& path);

}  // namespace cwerm

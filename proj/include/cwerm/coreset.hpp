#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cwerm/geometry.hpp"

namespace cwerm {

enum class CoresetStrategy { kModerate, kRandom };

const char* to_string(CoresetStrategy strategy);
CoresetStrategy coreset_strategy_from_string(const std::string& name);

/// Selected rows of a source dataset. `indices` is strictly increasing.
struct CoresetSelection {
  std::vector<std::size_t> indices;
  double ratio = 1.0;
  CoresetStrategy strategy = CoresetStrategy::kModerate;
  std::optional<std::uint64_t> seed;  // random strategy only

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const CoresetSelection&, const CoresetSelection&) = default;
};

/// Per-class quota max(1, round(ratio * class_size)), rounding half to even.
std::size_t class_quota(std::size_t class_size, double ratio);

/// Keeps, per class, the samples whose distance to the class median is closest
/// to that class's median distance. Ties: smaller distance, then lower index.
CoresetSelection select_moderate(const LabeledDataset& ds, const DistanceScores& scores, double ratio);

/// Convenience: medians, scores and moderate selection in one call.
CoresetSelection select_moderate(const LabeledDataset& ds, double ratio);

CoresetSelection select_random(const LabeledDataset& ds, double ratio, std::uint64_t seed);

/// Throws unless every index is in range and the list is strictly increasing.
void check_selection(const CoresetSelection& selection, std::size_t dataset_size);

}  // namespace cwerm

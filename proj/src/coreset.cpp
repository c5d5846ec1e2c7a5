#include "cwerm/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "cwerm/random.hpp"

namespace cwerm {

const char* to_string(CoresetStrategy strategy) {
  return strategy == CoresetStrategy::kModerate ? "moderate" : "random";
}

CoresetStrategy coreset_strategy_from_string(const std::string& name) {
  if (name == "moderate") return CoresetStrategy::kModerate;
  if (name == "random") return CoresetStrategy::kRandom;
  throw invalid_argument("unknown coreset strategy '" + name + "'");
}

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw invalid_argument("invalid ratio " + std::to_string(ratio) + ": must be in (0, 1]");
  }
}

}  // namespace

std::size_t class_quota(std::size_t class_size, double ratio) {
  // nearbyint honours the default rounding mode: round half to even.
  const double raw = std::nearbyint(ratio * static_cast<double>(class_size));
  const auto k = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(k, class_size);
}

CoresetSelection select_moderate(const LabeledDataset& ds, const DistanceScores& scores, double ratio) {
  check_ratio(ratio);
  if (scores.distance.size() != ds.size() ||
      scores.per_class_median_distance.size() != static_cast<std::size_t>(ds.class_count)) {
    throw dimension_mismatch("distance scores were not computed from this dataset");
  }
  CoresetSelection out;
  out.ratio = ratio;
  out.strategy = CoresetStrategy::kModerate;

  const auto groups = ds.indices_by_class();
  std::vector<std::tuple<double, double, std::size_t>> keyed;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) continue;
    const double target = scores.per_class_median_distance[c];
    keyed.clear();
    for (const std::size_t i : groups[c]) {
      keyed.emplace_back(std::abs(scores.distance[i] - target), scores.distance[i], i);
    }
    const std::size_t k = class_quota(groups[c].size(), ratio);
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end());
    for (std::size_t r = 0; r < k; ++r) out.indices.push_back(std::get<2>(keyed[r]));
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

CoresetSelection select_moderate(const LabeledDataset& ds, double ratio) {
  return select_moderate(ds, median_distance_scores(ds, class_medians(ds)), ratio);
}

CoresetSelection select_random(const LabeledDataset& ds, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  CoresetSelection out;
  out.ratio = ratio;
  out.strategy = CoresetStrategy::kRandom;
  out.seed = seed;

  Rng rng(derive_seed(seed, "select-random"));
  for (const auto& group : ds.indices_by_class()) {
    if (group.empty()) continue;
    const std::size_t k = class_quota(group.size(), ratio);
    for (const std::size_t pick : rng.sample_without_replacement(group.size(), k)) {
      out.indices.push_back(group[pick]);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

void check_selection(const CoresetSelection& selection, std::size_t dataset_size) {
  if (selection.indices.empty()) throw Error(ErrorKind::kEmptyInput, "empty coreset selection");
  for (std::size_t i = 0; i < selection.indices.size(); ++i) {
    if (selection.indices[i] >= dataset_size) {
      throw invalid_argument("selection index " + std::to_string(selection.indices[i]) +
                             " out of range for dataset of size " + std::to_string(dataset_size));
    }
    if (i > 0 && selection.indices[i] <= selection.indices[i - 1]) {
      throw invalid_argument("selection indices must be strictly increasing");
    }
  }
}

}  // namespace cwerm

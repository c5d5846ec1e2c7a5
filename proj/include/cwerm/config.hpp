#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cwerm/coreset.hpp"
#include "cwerm/data.hpp"
#include "cwerm/model.hpp"
#include "cwerm/reweight.hpp"
#include "cwerm/serialize.hpp"

namespace cwerm {

enum class MethodArm { kErm, kWErm, kCrErm, kCmsErm, kCwErm };

const char* to_string(MethodArm arm);
MethodArm method_arm_from_string(const std::string& name);
inline constexpr MethodArm kAllArms[] = {MethodArm::kErm, MethodArm::kWErm, MethodArm::kCrErm,
                                        MethodArm::kCmsErm, MethodArm::kCwErm};

struct DataConfig {
  std::string source = "blobs";  // blobs | moons | csv
  int classes = 4;
  std::size_t n_per_class = 1000;
  std::size_t dim = 16;
  double separation = 8.0;
  double spread = 1.5;
  std::size_t n = 400;  // moons
  double noise_std = 0.1;
  std::string path;  // csv
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  double label_noise = 0.0;  // applied to the training pool only
};

struct CoresetConfig {
  double ratio = 0.05;
  CoresetStrategy strategy = CoresetStrategy::kModerate;
};

struct TrainSection {
  std::vector<std::size_t> hidden = {64};
  TrainConfig train;  // seed is replaced per trial
};

struct HarnessConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<MethodArm> arms = {std::begin(kAllArms), std::end(kAllArms)};
  std::vector<double> ratios = {0.01, 0.05, 0.2, 1.0};
};

/// Everything a run needs. Parsed from one JSON document with the sections
/// data, featurizer, coreset, meta, train, harness; unknown keys are errors.
struct RunConfig {
  DataConfig data;
  FeaturizerSpec featurizer{FeaturizerKind::kStandardize, 0, 0};
  CoresetConfig coreset;
  MetaConfig meta;
  TrainSection train;
  HarnessConfig harness;
};

RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& cfg);

/// Builds the raw dataset the data section describes.
LabeledDataset materialize_dataset(const DataConfig& cfg);

}  // namespace cwerm

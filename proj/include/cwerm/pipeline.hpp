#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwerm/broadcast.hpp"
#include "cwerm/config.hpp"

namespace cwerm {

struct StageTimes {
  double featurize = 0.0;
  double select = 0.0;
  double reweight = 0.0;
  double broadcast = 0.0;
  double train = 0.0;

  double sum() const { return featurize + select + reweight + broadcast + train; }
};

/// Sample ids each stage read. Used to prove the test split never leaks into
/// fitting, selection, meta data or reweighting.
struct AuditLog {
  std::map<std::string, std::vector<SampleId>> touched;
  std::vector<SampleId> test_ids;

  /// True when no stage other than "evaluate" touched a test id.
  bool test_isolated() const;
};

struct CoresetDiagnostics {
  std::size_t size = 0;
  std::size_t flipped = 0;
  std::optional<double> mean_weight_flipped;  // reweighting arms with noisy members only
  std::optional<double> mean_weight_clean;
};

/// Per-stage outputs, kept so the CLI can write them as artifacts.
struct RunArtifacts {
  std::optional<CoresetSelection> selection;
  std::optional<CoresetWeights> coreset_weights;
  std::optional<BroadcastWeights> broadcast;
  std::vector<SampleId> pool_ids;
  MlpClassifier model;
  TrainHistory history;
};

struct RunReport {
  MethodArm method = MethodArm::kErm;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  StageTimes stage_times;
  double total_seconds = 0.0;
  std::size_t pool_size = 0;
  std::size_t meta_size = 0;
  std::size_t test_size = 0;
  std::size_t train_rows = 0;  // rows the final classifier was trained on
  CoresetDiagnostics coreset;
  Json config;
  Json metadata;
  AuditLog audit;
  RunArtifacts artifacts;
};

/// Training split as the methods see it: a clean balanced meta set carved
/// out first, then label noise injected into the remaining pool.
struct TrialData {
  LabeledDataset pool;
  LabeledDataset meta;
  std::vector<bool> flip_mask;  // over pool rows
};

TrialData prepare_trial(const LabeledDataset& train_ds, const RunConfig& cfg, std::uint64_t seed);

/// Stratified train/test split of a raw dataset, driven by data.seed.
std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, const DataConfig& cfg);

/// Runs one method arm once on (train_ds, test_ds), timing each stage.
RunReport run_method(MethodArm arm, const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                     const RunConfig& cfg, std::uint64_t seed);

struct Summary {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> stddev;  // n - 1 denominator; absent below two values
};

Summary summarize(std::span<const double> values);

struct CellFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct SweepRow {
  std::string label;            // "ratio=<r>" or "uniform"
  std::optional<double> ratio;  // absent for the uniform baseline row
  MethodArm method = MethodArm::kCwErm;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<double>> accuracies;  // aligned with seeds; absent on failure
  Summary accuracy;
  Summary reweight_seconds;
  Summary total_seconds;
  std::vector<CellFailure> failures;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // one per ratio, then the baseline
  Json config;
};

SweepReport ratio_sweep(const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                        std::span<const double> ratios, std::span<const std::uint64_t> seeds, const RunConfig& cfg);

struct CompareRow {
  MethodArm method = MethodArm::kErm;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<double>> accuracies;
  Summary accuracy;
  std::map<std::string, Summary> stage_seconds;
  Summary total_seconds;
  std::vector<CellFailure> failures;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<RunReport> runs;  // every successful cell, arm-major
  Json config;
};

CompareReport compare(const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                      std::span<const MethodArm> arms, std::span<const std::uint64_t> seeds, const RunConfig& cfg);

// Rendering -------------------------------------------------------------------

inline constexpr int kReportSchema = 1;

Json to_json(const StageTimes& t);
Json to_json(const RunReport& report);
Json to_json(const SweepReport& report);
Json to_json(const CompareReport& report);

std::string run_table_text(const RunReport& report);
std::string sweep_table_text(const SweepReport& report);
std::string sweep_csv_text(const SweepReport& report);
std::string compare_table_text(const CompareReport& report);

}  // namespace cwerm

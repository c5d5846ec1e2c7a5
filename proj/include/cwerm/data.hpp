#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwerm/matrix.hpp"

namespace cwerm {

using SampleId = std::int64_t;

/// Feature matrix plus dense class labels and stable sample ids.
///
/// Row i of `features` belongs to `labels[i]` and `ids[i]`. Labels are dense in
/// [0, class_count). `label_names` is optional and maps a dense label back to
/// the token it was read from (CSV ingestion).
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<SampleId> ids;
  int class_count = 0;
  std::vector<std::string> label_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  /// Checks shape agreement, label range, id uniqueness, and finiteness.
  /// With `require_every_class`, each class must also have at least one row.
  void validate(bool require_every_class = true) const;

  /// Rows at `indices` (in that order). Keeps class_count and label_names.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_counts() const;

  /// Row indices grouped by class, each group ascending.
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

LabeledDataset make_blobs(int k, std::size_t n_per_class, std::size_t d, double separation,
                          double spread, std::uint64_t seed);

LabeledDataset make_two_moons(std::size_t n, double noise_std, std::uint64_t seed);

LabeledDataset load_csv(const std::filesystem::path& path);
void write_csv(const LabeledDataset& ds, const std::filesystem::path& path);

struct NoiseSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

struct NoisyDataset {
  LabeledDataset dataset;
  std::vector<bool> flip_mask;
};

NoisyDataset inject_label_noise(const LabeledDataset& ds, const NoiseSpec& spec);

std::vector<LabeledDataset> split(const LabeledDataset& ds, std::span<const double> fractions,
                                  std::uint64_t seed, bool stratified);

/// Same partition as `split`, as row-index lists (ascending within each part).
std::vector<std::vector<std::size_t>> split_indices(const LabeledDataset& ds,
                                                    std::span<const double> fractions,
                                                    std::uint64_t seed, bool stratified);

// Featurizers ----------------------------------------------------------------

enum class FeaturizerKind { kIdentity, kStandardize, kPca, kRandomProjection };

const char* to_string(FeaturizerKind kind);
FeaturizerKind featurizer_kind_from_string(const std::string& name);

struct FeaturizerSpec {
  FeaturizerKind kind = FeaturizerKind::kIdentity;
  std::size_t output_dim = 0;  // pca / random_projection only
  std::uint64_t seed = 0;
};

/// A featurizer whose statistics were computed on one dataset, applicable to
/// any dataset of the same input dimension. Output is `(x - offset) * projection`
/// followed by per-column scaling for standardize.
class FittedFeaturizer {
 public:
  static FittedFeaturizer fit(const LabeledDataset& ds, const FeaturizerSpec& spec);

  LabeledDataset apply(const LabeledDataset& ds) const;
  Matrix transform(const Matrix& x) const;

  const FeaturizerSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept;
  /// input_dim x output_dim; empty for identity and standardize.
  const Matrix& projection() const noexcept { return projection_; }

 private:
  FeaturizerSpec spec_;
  std::size_t input_dim_ = 0;
  std::vector<double> offset_;
  std::vector<double> scale_;
  Matrix projection_;  // input_dim x output_dim; empty for identity/standardize
};

/// Fits on `ds` and applies to `ds`.
LabeledDataset featurize(const LabeledDataset& ds, const FeaturizerSpec& spec);

}  // namespace cwerm

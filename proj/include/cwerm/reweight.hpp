#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cwerm/coreset.hpp"
#include "cwerm/model.hpp"

namespace cwerm {

/// Loss-to-weight network: v(L) = sigmoid(w2 . relu(w1 * L + b1) + b2).
///
/// Flat parameter layout: w1[H], b1[H], w2[H], b2.
class WeightNet {
 public:
  WeightNet() = default;

  static WeightNet zeros(std::size_t hidden_size);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static WeightNet init(std::size_t hidden_size, std::uint64_t seed);
  static WeightNet from_parameters(std::size_t hidden_size, std::vector<double> parameters);

  std::size_t hidden_size() const noexcept { return hidden_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  double operator()(double loss) const;

  /// Adds coefficient * d v(loss) / d parameters into `gradient`.
  void accumulate_gradient(double loss, double coefficient, std::span<double> gradient) const;

  friend bool operator==(const WeightNet&, const WeightNet&) = default;

 private:
  explicit WeightNet(std::size_t hidden_size);

  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

std::vector<double> weightnet_forward(const WeightNet& net, std::span<const double> losses);

enum class IterationUnit { kStep, kEpoch };
enum class WeightNetInit { kUniform, kZero };

const char* to_string(IterationUnit unit);
IterationUnit iteration_unit_from_string(const std::string& name);
const char* to_string(WeightNetInit init);
WeightNetInit weightnet_init_from_string(const std::string& name);

struct MetaConfig {
  double inner_lr = 0.1;
  double meta_lr = 1e-3;
  /// Number of meta steps, or of passes over the coreset when unit is kEpoch.
  std::size_t iterations = 100;
  IterationUnit unit = IterationUnit::kStep;
  std::size_t coreset_batch = 32;
  std::size_t meta_batch = 40;
  std::size_t meta_per_class = 10;
  std::size_t hidden_size = 100;
  WeightNetInit init = WeightNetInit::kUniform;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetaPartition {
  std::vector<std::size_t> meta_indices;       // ascending, into the source dataset
  std::vector<std::size_t> remainder_indices;  // ascending, into the source dataset
  LabeledDataset meta;
  LabeledDataset remainder;
};

/// Exactly meta_per_class rows per class, drawn uniformly with the seed.
MetaPartition build_meta_set(const LabeledDataset& ds, std::size_t meta_per_class, std::uint64_t seed);

struct MetaGradient {
  std::vector<double> gradient;  // d meta_loss / d weight-net parameters
  double meta_loss = 0.0;        // mean loss of the virtually updated model on the meta batch
};

/// One-step lookahead meta-gradient. With w_i = v(L_i), S = sum w and
/// theta' = theta - inner_lr * sum_i (w_i / S) g_i, the meta loss depends on
/// each w_i through theta', giving
///   dLmeta/dw_i = -inner_lr * ((g_meta . g_i) S - sum_j w_j (g_meta . g_j)) / S^2,
/// which is chained through dv(L_i)/dparams with L_i held fixed.
MetaGradient compute_meta_gradient(const MlpClassifier& model, const WeightNet& net,
                                   const LabeledDataset& coreset_batch, const LabeledDataset& meta_batch,
                                   double inner_lr);

struct MetaDiagnostics {
  double meta_loss = 0.0;
  double meta_gradient_norm = 0.0;
};

/// Meta update of the weight net followed by a weighted SGD step of the
/// classifier using the updated net's weights. `iteration` only labels errors.
MetaDiagnostics meta_step_in_place(MlpClassifier& model, WeightNet& net, const LabeledDataset& coreset_batch,
                                   const LabeledDataset& meta_batch, const MetaConfig& cfg,
                                   std::size_t iteration = 0);

struct MetaStepResult {
  WeightNet net;
  MlpClassifier model;
  MetaDiagnostics diagnostics;
};

MetaStepResult meta_step(const MlpClassifier& model, const WeightNet& net, const LabeledDataset& coreset_batch,
                         const LabeledDataset& meta_batch, const MetaConfig& cfg);

struct CoresetWeights {
  std::vector<std::size_t> indices;  // same as the selection's
  std::vector<double> weights;       // normalized to mean 1
  std::vector<double> raw_weights;   // weight-net outputs before normalization
  std::string normalization = "mean1";
  MetaConfig config;
  std::vector<double> meta_loss_trace;  // one entry per meta step
  WeightNet net;                        // final weight net
};

/// Meta set drawn from rows of `ds` outside the selection.
CoresetWeights reweight_coreset(const LabeledDataset& ds, const CoresetSelection& selection,
                                const MlpClassifier& model_template, const MetaConfig& cfg);

/// Caller-provided meta set (must not overlap the coreset).
CoresetWeights reweight_coreset(const LabeledDataset& ds, const CoresetSelection& selection,
                                const LabeledDataset& meta_set, const MlpClassifier& model_template,
                                const MetaConfig& cfg);

/// Number of meta steps cfg implies for a coreset of the given size.
std::size_t meta_step_count(const MetaConfig& cfg, std::size_t coreset_size);

}  // namespace cwerm

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cwerm/data.hpp"

namespace cwerm {

/// ReLU multilayer perceptron with an identity output layer.
///
/// All parameters live in one flat vector: for each layer l, the weight matrix
/// (out x in, row-major) followed by the bias vector. Gradients use the same
/// layout, so optimizer updates are plain elementwise loops.
class MlpClassifier {
 public:
  MlpClassifier() = default;

  /// Weights ~ N(0, 2 / fan_in), biases zero.
  static MlpClassifier init(std::vector<std::size_t> layer_sizes, std::uint64_t seed);
  static MlpClassifier zeros(std::vector<std::size_t> layer_sizes);
  static MlpClassifier from_parameters(std::vector<std::size_t> layer_sizes, std::vector<double> parameters);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t layer_count() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t class_count() const noexcept { return sizes_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  friend bool operator==(const MlpClassifier&, const MlpClassifier&) = default;

 private:
  explicit MlpClassifier(std::vector<std::size_t> layer_sizes);

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Flat gradient aligned with MlpClassifier::parameters().
using Gradient = std::vector<double>;

struct SampleStats {
  double loss = 0.0;
  int predicted = 0;
};

/// Adds sum_r coefficients[r] * grad L(rows[r]) into `gradient` (which must be
/// parameter_count long). Rows are processed in order; within a row the output
/// delta is scaled by its coefficient before backpropagation. Optionally
/// reports each row's loss and argmax prediction.
void accumulate_gradient(const MlpClassifier& model, const Matrix& features, std::span<const int> labels,
                         std::span<const std::size_t> rows, std::span<const double> coefficients,
                         std::span<double> gradient, std::vector<SampleStats>* stats = nullptr);

Matrix forward(const MlpClassifier& model, const Matrix& features);

/// Softmax cross-entropy per row, computed with max subtraction.
std::vector<double> per_sample_losses(const MlpClassifier& model, const Matrix& features,
                                      std::span<const int> labels);

/// Gradient of (1 / sum w) * sum w_i L_i. Throws when the weights sum to zero.
Gradient weighted_gradient(const MlpClassifier& model, const Matrix& features, std::span<const int> labels,
                           std::span<const double> weights);

std::vector<Gradient> per_sample_gradients(const MlpClassifier& model, const Matrix& features,
                                           std::span<const int> labels);

/// Argmax per row; ties go to the lowest class index.
std::vector<int> predict(const MlpClassifier& model, const Matrix& features);

double evaluate(const MlpClassifier& model, const LabeledDataset& ds);

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> mean_loss;  // per epoch, losses seen during that epoch's steps
  std::vector<double> accuracy;   // per epoch, predictions made before each step's update
};

struct TrainResult {
  MlpClassifier model;
  TrainHistory history;
};

/// Minibatch SGD with momentum on sum_i w_i L_i, weights renormalized within
/// each batch by max(batch weight sum, 1e-12). Rows are reshuffled each epoch
/// from a generator seeded with cfg.seed. Update per parameter:
///   v = momentum * v + g + weight_decay * theta;  theta -= learning_rate * v
TrainResult train_weighted(MlpClassifier model, const LabeledDataset& ds, std::span<const double> weights,
                           const TrainConfig& cfg);

/// Guard applied to every weight-sum denominator in training and reweighting.
inline constexpr double kWeightSumFloor = 1e-12;

void check_weights(std::span<const double> weights, std::size_t expected_size);

}  // namespace cwerm

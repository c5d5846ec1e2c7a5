#include "cwerm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cwerm/random.hpp"

namespace cwerm {

// Parameters ---------------------------------------------------------------

MlpClassifier::MlpClassifier(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw invalid_argument("an MLP needs at least two layer sizes");
  for (const std::size_t s : sizes_) {
    if (s < 1) throw invalid_argument("MLP layer sizes must all be >= 1");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

MlpClassifier MlpClassifier::zeros(std::vector<std::size_t> layer_sizes) {
  return MlpClassifier(std::move(layer_sizes));
}

MlpClassifier MlpClassifier::init(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
  MlpClassifier m(std::move(layer_sizes));
  Rng rng(derive_seed(seed, "mlp-init"));
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(m.sizes_[l]));
    for (auto& w : m.weights(l)) w = rng.normal(0.0, sd);
  }
  return m;
}

MlpClassifier MlpClassifier::from_parameters(std::vector<std::size_t> layer_sizes,
                                             std::vector<double> parameters) {
  MlpClassifier m(std::move(layer_sizes));
  if (parameters.size() != m.params_.size()) {
    throw dimension_mismatch("parameter vector has " + std::to_string(parameters.size()) +
                             " entries, layer sizes need " + std::to_string(m.params_.size()));
  }
  for (const double p : parameters) {
    if (!std::isfinite(p)) throw invalid_argument("MLP parameters must be finite");
  }
  m.params_ = std::move(parameters);
  return m;
}

std::span<double> MlpClassifier::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(weight_offset(layer), sizes_[layer] * sizes_[layer + 1]);
}
std::span<const double> MlpClassifier::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(weight_offset(layer), sizes_[layer] * sizes_[layer + 1]);
}
std::span<double> MlpClassifier::bias(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset(layer), sizes_[layer + 1]);
}
std::span<const double> MlpClassifier::bias(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer), sizes_[layer + 1]);
}

// Forward / backward --------------------------------------------------------

namespace {

void check_inputs(const MlpClassifier& model, const Matrix& features, std::span<const int> labels) {
  if (features.cols() != model.input_dim()) {
    throw dimension_mismatch("model expects " + std::to_string(model.input_dim()) + " features, got " +
                             std::to_string(features.cols()));
  }
  if (labels.size() != features.rows()) {
    throw dimension_mismatch("labels and feature rows disagree in length");
  }
  const auto k = static_cast<int>(model.class_count());
  for (const int y : labels) {
    if (y < 0 || y >= k) throw dimension_mismatch("label outside the model's class range");
  }
}

/// Scratch buffers for one sample's pass through the network.
class Workspace {
 public:
  explicit Workspace(const MlpClassifier& model) {
    const auto& sizes = model.layer_sizes();
    for (std::size_t l = 1; l < sizes.size(); ++l) {
      pre_.emplace_back(sizes[l]);
      post_.emplace_back(sizes[l]);
    }
    std::size_t widest = 0;
    for (const std::size_t s : sizes) widest = std::max(widest, s);
    delta_.resize(widest);
    back_.resize(widest);
    prob_.resize(model.class_count());
  }

  void forward(const MlpClassifier& model, std::span<const double> x) {
    const auto& sizes = model.layer_sizes();
    const std::size_t layers = model.layer_count();
    std::span<const double> input = x;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const auto w = model.weights(l);
      const auto b = model.bias(l);
      auto& z = pre_[l];
      auto& a = post_[l];
      const bool hidden = l + 1 < layers;
      for (std::size_t j = 0; j < out; ++j) {
        double s = b[j];
        const double* wj = w.data() + j * in;
        for (std::size_t k = 0; k < in; ++k) s += wj[k] * input[k];
        z[j] = s;
        a[j] = hidden ? (s > 0.0 ? s : 0.0) : s;
      }
      input = a;
    }
  }

  std::span<const double> logits() const { return pre_.back(); }

  /// Cross-entropy for `label`; fills the softmax probabilities.
  SampleStats loss(int label) {
    const auto z = logits();
    double m = z[0];
    int arg = 0;
    for (std::size_t k = 1; k < z.size(); ++k) {
      if (z[k] > m) {
        m = z[k];
        arg = static_cast<int>(k);
      }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      prob_[k] = std::exp(z[k] - m);
      sum += prob_[k];
    }
    for (std::size_t k = 0; k < z.size(); ++k) prob_[k] /= sum;
    const double l = std::log(sum) - (z[static_cast<std::size_t>(label)] - m);
    return {l, arg};
  }

  /// Requires forward() and loss() for the same sample.
  void backward(const MlpClassifier& model, std::span<const double> x, int label, double coefficient,
                std::span<double> grad) {
    const auto& sizes = model.layer_sizes();
    const std::size_t layers = model.layer_count();
    const std::size_t k_out = sizes.back();
    for (std::size_t k = 0; k < k_out; ++k) {
      const double onehot = static_cast<int>(k) == label ? 1.0 : 0.0;
      delta_[k] = coefficient * (prob_[k] - onehot);
    }
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const std::span<const double> input = l == 0 ? x : std::span<const double>(post_[l - 1]);
      double* gw = grad.data() + model.weight_offset(l);
      double* gb = grad.data() + model.bias_offset(l);
      for (std::size_t j = 0; j < out; ++j) {
        const double dj = delta_[j];
        double* gwj = gw + j * in;
        for (std::size_t k = 0; k < in; ++k) gwj[k] += dj * input[k];
        gb[j] += dj;
      }
      if (l == 0) break;
      const auto w = model.weights(l);
      const auto& z_prev = pre_[l - 1];
      for (std::size_t k = 0; k < in; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < out; ++j) s += w[j * in + k] * delta_[j];
        back_[k] = z_prev[k] > 0.0 ? s : 0.0;
      }
      std::copy(back_.begin(), back_.begin() + static_cast<std::ptrdiff_t>(in), delta_.begin());
    }
  }

 private:
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> post_;
  std::vector<double> delta_;
  std::vector<double> back_;
  std::vector<double> prob_;
};

}  // namespace

void accumulate_gradient(const MlpClassifier& model, const Matrix& features, std::span<const int> labels,
                         std::span<const std::size_t> rows, std::span<const double> coefficients,
                         std::span<double> gradient, std::vector<SampleStats>* stats) {
  if (rows.size() != coefficients.size()) throw dimension_mismatch("one coefficient per row required");
  if (gradient.size() != model.parameter_count()) {
    throw dimension_mismatch("gradient buffer does not match the model");
  }
  Workspace ws(model);
  if (stats) stats->resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto x = features.row(rows[r]);
    const int y = labels[rows[r]];
    ws.forward(model, x);
    const SampleStats s = ws.loss(y);
    if (stats) (*stats)[r] = s;
    ws.backward(model, x, y, coefficients[r], gradient);
  }
}

Matrix forward(const MlpClassifier& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw dimension_mismatch("model expects " + std::to_string(model.input_dim()) + " features, got " +
                             std::to_string(features.cols()));
  }
  Workspace ws(model);
  Matrix out(features.rows(), model.class_count());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    ws.forward(model, features.row(i));
    const auto z = ws.logits();
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> per_sample_losses(const MlpClassifier& model, const Matrix& features,
                                      std::span<const int> labels) {
  check_inputs(model, features, labels);
  Workspace ws(model);
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    ws.forward(model, features.row(i));
    out[i] = ws.loss(labels[i]).loss;
  }
  return out;
}

void check_weights(std::span<const double> weights, std::size_t expected_size) {
  if (weights.size() != expected_size) {
    throw dimension_mismatch("expected " + std::to_string(expected_size) + " weights, got " +
                             std::to_string(weights.size()));
  }
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw invalid_argument("weights must be finite and nonnegative");
  }
}

Gradient weighted_gradient(const MlpClassifier& model, const Matrix& features, std::span<const int> labels,
                           std::span<const double> weights) {
  check_inputs(model, features, labels);
  check_weights(weights, features.rows());
  double total = 0.0;
  for (const double w : weights) total += w;
  if (total == 0.0) throw invalid_argument("weighted_gradient: weights sum to zero");
  const double denom = std::max(total, kWeightSumFloor);

  std::vector<std::size_t> rows(features.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> coeffs(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) coeffs[i] = weights[i] / denom;
  Gradient grad(model.parameter_count(), 0.0);
  accumulate_gradient(model, features, labels, rows, coeffs, grad);
  return grad;
}

std::vector<Gradient> per_sample_gradients(const MlpClassifier& model, const Matrix& features,
                                           std::span<const int> labels) {
  check_inputs(model, features, labels);
  std::vector<Gradient> out;
  out.reserve(features.rows());
  const double one = 1.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    Gradient g(model.parameter_count(), 0.0);
    accumulate_gradient(model, features, labels, std::span<const std::size_t>(&i, 1),
                        std::span<const double>(&one, 1), g);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<int> predict(const MlpClassifier& model, const Matrix& features) {
  const Matrix logits = forward(model, features);
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    out[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

double evaluate(const MlpClassifier& model, const LabeledDataset& ds) {
  if (ds.size() == 0) throw Error(ErrorKind::kEmptyInput, "cannot evaluate on an empty dataset");
  const auto pred = predict(model, ds.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Training -------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw invalid_argument("learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw invalid_argument("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw invalid_argument("weight_decay must be >= 0");
  if (epochs < 1) throw invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw invalid_argument("batch_size must be >= 1");
}

TrainResult train_weighted(MlpClassifier model, const LabeledDataset& ds, std::span<const double> weights,
                           const TrainConfig& cfg) {
  cfg.validate();
  check_inputs(model, ds.features, ds.labels);
  check_weights(weights, ds.size());
  if (ds.size() == 0) throw Error(ErrorKind::kEmptyInput, "cannot train on an empty dataset");

  const std::size_t n = ds.size();
  const std::size_t p = model.parameter_count();
  Rng rng(derive_seed(cfg.seed, "train-shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(p, 0.0);
  Gradient grad(p);
  std::vector<double> coeffs;
  std::vector<SampleStats> stats;
  TrainHistory history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      double total = 0.0;
      for (const std::size_t r : rows) total += weights[r];
      const double denom = std::max(total, kWeightSumFloor);
      coeffs.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) coeffs[i] = weights[rows[i]] / denom;

      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate_gradient(model, ds.features, ds.labels, rows, coeffs, grad, &stats);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        batch_loss += stats[i].loss;
        hits += stats[i].predicted == ds.labels[rows[i]];
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << " step " << step;
        throw Error(ErrorKind::kNumerical, msg.str());
      }
      loss_sum += batch_loss;

      auto theta = model.parameters();
      for (std::size_t k = 0; k < p; ++k) {
        velocity[k] = cfg.momentum * velocity[k] + grad[k] + cfg.weight_decay * theta[k];
        theta[k] -= cfg.learning_rate * velocity[k];
      }
    }
    history.mean_loss.push_back(loss_sum / static_cast<double>(n));
    history.accuracy.push_back(static_cast<double>(hits) / static_cast<double>(n));
  }
  return {std::move(model), std::move(history)};
}

}  // namespace cwerm

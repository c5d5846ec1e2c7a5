#include "cwerm/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cwerm/random.hpp"

namespace cwerm {

// Weight net -----------------------------------------------------------------

WeightNet::WeightNet(std::size_t hidden_size) : hidden_(hidden_size), params_(3 * hidden_size + 1, 0.0) {
  if (hidden_size < 1) throw invalid_argument("weight net hidden_size must be >= 1");
}

WeightNet WeightNet::zeros(std::size_t hidden_size) { return WeightNet(hidden_size); }

WeightNet WeightNet::init(std::size_t hidden_size, std::uint64_t seed) {
  WeightNet net(hidden_size);
  Rng rng(derive_seed(seed, "weightnet-init"));
  const std::size_t h = hidden_size;
  const double outer = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t j = 0; j < 2 * h; ++j) net.params_[j] = rng.uniform(-1.0, 1.0);
  for (std::size_t j = 2 * h; j < 3 * h + 1; ++j) net.params_[j] = rng.uniform(-outer, outer);
  return net;
}

WeightNet WeightNet::from_parameters(std::size_t hidden_size, std::vector<double> parameters) {
  WeightNet net(hidden_size);
  if (parameters.size() != net.params_.size()) {
    throw dimension_mismatch("weight net expects " + std::to_string(net.params_.size()) + " parameters");
  }
  net.params_ = std::move(parameters);
  return net;
}

namespace {

// Clamped so the result stays strictly inside (0, 1) in floating point.
double sigmoid(double x) {
  constexpr double kLow = std::numeric_limits<double>::min();
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  double s = 0.0;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kLow, kHigh);
}

}  // namespace

double WeightNet::operator()(double loss) const {
  const std::size_t h = hidden_;
  const double* w1 = params_.data();
  const double* b1 = w1 + h;
  const double* w2 = b1 + h;
  double out = params_[3 * h];
  for (std::size_t j = 0; j < h; ++j) {
    const double a = w1[j] * loss + b1[j];
    if (a > 0.0) out += w2[j] * a;
  }
  return sigmoid(out);
}

void WeightNet::accumulate_gradient(double loss, double coefficient, std::span<double> gradient) const {
  const std::size_t h = hidden_;
  const double* w1 = params_.data();
  const double* b1 = w1 + h;
  const double* w2 = b1 + h;
  const double v = (*this)(loss);
  const double dv = coefficient * v * (1.0 - v);
  for (std::size_t j = 0; j < h; ++j) {
    const double a = w1[j] * loss + b1[j];
    if (a > 0.0) {
      gradient[j] += dv * w2[j] * loss;
      gradient[h + j] += dv * w2[j];
      gradient[2 * h + j] += dv * a;
    }
  }
  gradient[3 * h] += dv;
}

std::vector<double> weightnet_forward(const WeightNet& net, std::span<const double> losses) {
  std::vector<double> out(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) out[i] = net(losses[i]);
  return out;
}

// Config ---------------------------------------------------------------------

const char* to_string(IterationUnit unit) { return unit == IterationUnit::kStep ? "step" : "epoch"; }

IterationUnit iteration_unit_from_string(const std::string& name) {
  if (name == "step") return IterationUnit::kStep;
  if (name == "epoch") return IterationUnit::kEpoch;
  throw invalid_argument("unknown iteration unit '" + name + "'");
}

const char* to_string(WeightNetInit init) { return init == WeightNetInit::kUniform ? "uniform" : "zero"; }

WeightNetInit weightnet_init_from_string(const std::string& name) {
  if (name == "uniform") return WeightNetInit::kUniform;
  if (name == "zero") return WeightNetInit::kZero;
  throw invalid_argument("unknown weight net init '" + name + "'");
}

void MetaConfig::validate() const {
  if (!(inner_lr > 0.0) || !std::isfinite(inner_lr)) throw invalid_argument("inner_lr must be > 0");
  if (!(meta_lr >= 0.0) || !std::isfinite(meta_lr)) throw invalid_argument("meta_lr must be >= 0");
  if (coreset_batch < 1 || meta_batch < 1) throw invalid_argument("meta batch sizes must be >= 1");
  if (meta_per_class < 1) throw invalid_argument("meta_per_class must be >= 1");
  if (hidden_size < 1) throw invalid_argument("hidden_size must be >= 1");
}

// Meta set -------------------------------------------------------------------

MetaPartition build_meta_set(const LabeledDataset& ds, std::size_t meta_per_class, std::uint64_t seed) {
  const auto groups = ds.indices_by_class();
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].size() <= meta_per_class) {
      throw Error(ErrorKind::kInsufficientData,
                  "class " + std::to_string(c) + " has " + std::to_string(groups[c].size()) +
                      " samples; building a meta set of " + std::to_string(meta_per_class) +
                      " per class needs more");
    }
  }
  Rng rng(derive_seed(seed, "meta-set"));
  MetaPartition out;
  std::vector<bool> in_meta(ds.size(), false);
  for (const auto& group : groups) {
    for (const std::size_t pick : rng.sample_without_replacement(group.size(), meta_per_class)) {
      in_meta[group[pick]] = true;
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_meta[i] ? out.meta_indices : out.remainder_indices).push_back(i);
  }
  out.meta = ds.subset(out.meta_indices);
  out.remainder = ds.subset(out.remainder_indices);
  return out;
}

// Meta step ------------------------------------------------------------------

namespace {

struct CoresetPass {
  std::vector<Gradient> gradients;
  std::vector<double> losses;
};

CoresetPass per_sample_pass(const MlpClassifier& model, const LabeledDataset& batch) {
  CoresetPass pass;
  pass.gradients.reserve(batch.size());
  pass.losses.reserve(batch.size());
  std::vector<SampleStats> stats;
  const double one = 1.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Gradient g(model.parameter_count(), 0.0);
    accumulate_gradient(model, batch.features, batch.labels, std::span<const std::size_t>(&i, 1),
                        std::span<const double>(&one, 1), g, &stats);
    pass.gradients.push_back(std::move(g));
    pass.losses.push_back(stats[0].loss);
  }
  return pass;
}

/// theta - lr * sum_i (w_i / S) g_i, with S floored.
void weighted_step(std::span<double> theta, const std::vector<Gradient>& grads, std::span<const double> w,
                   double lr) {
  double total = 0.0;
  for (const double wi : w) total += wi;
  const double denom = std::max(total, kWeightSumFloor);
  std::vector<double> direction(theta.size(), 0.0);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double c = w[i] / denom;
    for (std::size_t k = 0; k < theta.size(); ++k) direction[k] += c * grads[i][k];
  }
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * direction[k];
}

void check_batches(const MlpClassifier& model, const LabeledDataset& coreset_batch,
                   const LabeledDataset& meta_batch) {
  if (coreset_batch.size() == 0 || meta_batch.size() == 0) {
    throw Error(ErrorKind::kEmptyInput, "meta step needs nonempty coreset and meta batches");
  }
  if (coreset_batch.dim() != model.input_dim() || meta_batch.dim() != model.input_dim()) {
    throw dimension_mismatch("meta step batches do not match the model input dimension");
  }
}

MetaGradient meta_gradient_from_pass(const MlpClassifier& model, const WeightNet& net, const CoresetPass& pass,
                                     const LabeledDataset& meta_batch, double inner_lr) {
  const std::size_t b = pass.losses.size();
  const auto w = weightnet_forward(net, pass.losses);
  double total = 0.0;
  for (const double wi : w) total += wi;
  const double denom = std::max(total, kWeightSumFloor);

  MlpClassifier lookahead = model;
  weighted_step(lookahead.parameters(), pass.gradients, w, inner_lr);

  const std::size_t m = meta_batch.size();
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const std::vector<double> coeffs(m, 1.0 / static_cast<double>(m));
  Gradient meta_grad(model.parameter_count(), 0.0);
  std::vector<SampleStats> stats;
  accumulate_gradient(lookahead, meta_batch.features, meta_batch.labels, rows, coeffs, meta_grad, &stats);

  MetaGradient out;
  for (const auto& s : stats) out.meta_loss += s.loss;
  out.meta_loss /= static_cast<double>(m);

  std::vector<double> dots(b, 0.0);
  double weighted_dots = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < meta_grad.size(); ++k) s += meta_grad[k] * pass.gradients[i][k];
    dots[i] = s;
    weighted_dots += w[i] * s;
  }
  out.gradient.assign(net.parameter_count(), 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const double c = -inner_lr * (dots[i] * denom - weighted_dots) / (denom * denom);
    net.accumulate_gradient(pass.losses[i], c, out.gradient);
  }
  return out;
}

}  // namespace

MetaGradient compute_meta_gradient(const MlpClassifier& model, const WeightNet& net,
                                   const LabeledDataset& coreset_batch, const LabeledDataset& meta_batch,
                                   double inner_lr) {
  check_batches(model, coreset_batch, meta_batch);
  return meta_gradient_from_pass(model, net, per_sample_pass(model, coreset_batch), meta_batch, inner_lr);
}

MetaDiagnostics meta_step_in_place(MlpClassifier& model, WeightNet& net, const LabeledDataset& coreset_batch,
                                   const LabeledDataset& meta_batch, const MetaConfig& cfg,
                                   std::size_t iteration) {
  check_batches(model, coreset_batch, meta_batch);
  const CoresetPass pass = per_sample_pass(model, coreset_batch);
  const MetaGradient mg = meta_gradient_from_pass(model, net, pass, meta_batch, cfg.inner_lr);

  MetaDiagnostics diag;
  diag.meta_loss = mg.meta_loss;
  double sq = 0.0;
  for (const double g : mg.gradient) sq += g * g;
  diag.meta_gradient_norm = std::sqrt(sq);
  if (!std::isfinite(diag.meta_gradient_norm) || !std::isfinite(diag.meta_loss)) {
    std::ostringstream msg;
    msg << "non-finite meta-gradient at iteration " << iteration;
    throw Error(ErrorKind::kNumerical, msg.str());
  }

  auto theta_net = net.parameters();
  for (std::size_t k = 0; k < theta_net.size(); ++k) theta_net[k] -= cfg.meta_lr * mg.gradient[k];

  // The classifier has not moved, so the coreset losses and gradients are reused.
  const auto w = weightnet_forward(net, pass.losses);
  weighted_step(model.parameters(), pass.gradients, w, cfg.inner_lr);
  return diag;
}

MetaStepResult meta_step(const MlpClassifier& model, const WeightNet& net, const LabeledDataset& coreset_batch,
                         const LabeledDataset& meta_batch, const MetaConfig& cfg) {
  MetaStepResult out{net, model, {}};
  out.diagnostics = meta_step_in_place(out.model, out.net, coreset_batch, meta_batch, cfg);
  return out;
}

// Coreset reweighting ---------------------------------------------------------

std::size_t meta_step_count(const MetaConfig& cfg, std::size_t coreset_size) {
  if (cfg.unit == IterationUnit::kStep) return cfg.iterations;
  const std::size_t per_pass = (coreset_size + cfg.coreset_batch - 1) / cfg.coreset_batch;
  return cfg.iterations * per_pass;
}

namespace {

/// Yields consecutive slices of a reshuffled permutation; reshuffles at each pass start.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch, std::uint64_t seed)
      : order_(n), batch_(std::min(batch, n)), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  std::span<const std::size_t> next() {
    if (cursor_ == 0) rng_.shuffle(std::span<std::size_t>(order_));
    const std::size_t end = std::min(order_.size(), cursor_ + batch_);
    const std::span<const std::size_t> out(order_.data() + cursor_, end - cursor_);
    cursor_ = end == order_.size() ? 0 : end;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

}  // namespace

CoresetWeights reweight_coreset(const LabeledDataset& ds, const CoresetSelection& selection,
                                const LabeledDataset& meta_set, const MlpClassifier& model_template,
                                const MetaConfig& cfg) {
  cfg.validate();
  check_selection(selection, ds.size());
  if (meta_set.size() == 0) throw Error(ErrorKind::kInsufficientData, "meta set is empty");

  const LabeledDataset coreset = ds.subset(selection.indices);
  MlpClassifier model = model_template;
  WeightNet net = cfg.init == WeightNetInit::kZero ? WeightNet::zeros(cfg.hidden_size)
                                                    : WeightNet::init(cfg.hidden_size, cfg.seed);

  const std::size_t steps = meta_step_count(cfg, coreset.size());
  BatchStream coreset_stream(coreset.size(), cfg.coreset_batch, derive_seed(cfg.seed, "coreset-batches"));
  BatchStream meta_stream(meta_set.size(), cfg.meta_batch, derive_seed(cfg.seed, "meta-batches"));
  const bool whole_meta = cfg.meta_batch >= meta_set.size();

  CoresetWeights out;
  out.config = cfg;
  out.meta_loss_trace.reserve(steps);
  for (std::size_t it = 0; it < steps; ++it) {
    const LabeledDataset batch = coreset.subset(coreset_stream.next());
    if (whole_meta) {
      out.meta_loss_trace.push_back(meta_step_in_place(model, net, batch, meta_set, cfg, it).meta_loss);
    } else {
      const LabeledDataset meta_batch = meta_set.subset(meta_stream.next());
      out.meta_loss_trace.push_back(meta_step_in_place(model, net, batch, meta_batch, cfg, it).meta_loss);
    }
  }

  const auto losses = per_sample_losses(model, coreset.features, coreset.labels);
  out.indices = selection.indices;
  out.raw_weights = weightnet_forward(net, losses);
  double total = 0.0;
  for (const double w : out.raw_weights) total += w;
  const double mean = total / static_cast<double>(out.raw_weights.size());
  out.weights.resize(out.raw_weights.size());
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    out.weights[i] = mean > 0.0 ? out.raw_weights[i] / mean : 1.0;
  }
  out.net = std::move(net);
  return out;
}

CoresetWeights reweight_coreset(const LabeledDataset& ds, const CoresetSelection& selection,
                                const MlpClassifier& model_template, const MetaConfig& cfg) {
  check_selection(selection, ds.size());
  std::vector<std::size_t> complement;
  complement.reserve(ds.size() - selection.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (next < selection.indices.size() && selection.indices[next] == i) {
      ++next;
    } else {
      complement.push_back(i);
    }
  }
  const LabeledDataset pool = ds.subset(complement);
  const MetaPartition partition = build_meta_set(pool, cfg.meta_per_class, cfg.seed);
  return reweight_coreset(ds, selection, partition.meta, model_template, cfg);
}

}  // namespace cwerm

#include "cwerm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "cwerm/random.hpp"

namespace cwerm {

bool AuditLog::test_isolated() const {
  const std::unordered_set<SampleId> test(test_ids.begin(), test_ids.end());
  for (const auto& [stage, ids] : touched) {
    if (stage == "evaluate") continue;
    for (const SampleId id : ids) {
      if (test.count(id)) return false;
    }
  }
  return true;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Runs `f`, adds its wall time to `slot`, and tags any library error with the stage.
template <typename F>
auto timed_stage(const char* stage, double& slot, F&& f) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      slot += seconds_since(start);
    } else {
      auto result = f();
      slot += seconds_since(start);
      return result;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + stage + "] " + e.what());
  }
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  LabeledDataset out;
  out.class_count = a.class_count;
  out.label_names = a.label_names;
  std::vector<double> values(a.features.values().begin(), a.features.values().end());
  values.insert(values.end(), b.features.values().begin(), b.features.values().end());
  out.features = Matrix(a.size() + b.size(), a.dim(), std::move(values));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

std::vector<SampleId> ids_at(const LabeledDataset& ds, std::span<const std::size_t> rows) {
  std::vector<SampleId> out;
  out.reserve(rows.size());
  for (const std::size_t r : rows) out.push_back(ds.ids[r]);
  return out;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, const DataConfig& cfg) {
  const double fractions[] = {1.0 - cfg.test_fraction, cfg.test_fraction};
  auto parts = split(ds, fractions, derive_seed(cfg.seed, "train-test"), true);
  return {std::move(parts[0]), std::move(parts[1])};
}

TrialData prepare_trial(const LabeledDataset& train_ds, const RunConfig& cfg, std::uint64_t seed) {
  MetaPartition partition = build_meta_set(train_ds, cfg.meta.meta_per_class, derive_seed(seed, "meta-carve"));
  NoisyDataset noisy = inject_label_noise(partition.remainder, {cfg.data.label_noise, derive_seed(seed, "noise")});
  return {std::move(noisy.dataset), std::move(partition.meta), std::move(noisy.flip_mask)};
}

RunReport run_method(MethodArm arm, const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                     const RunConfig& cfg, std::uint64_t seed) {
  const auto run_start = Clock::now();
  if (train_ds.dim() != test_ds.dim()) throw dimension_mismatch("train and test dimensions differ");

  RunReport report;
  report.method = arm;
  report.seed = seed;
  report.config = to_json(cfg);
  report.audit.test_ids = test_ds.ids;
  StageTimes& times = report.stage_times;

  TrialData trial = [&] {
    try {
      return prepare_trial(train_ds, cfg, seed);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("[prepare] ") + e.what());
    }
  }();
  report.pool_size = trial.pool.size();
  report.meta_size = trial.meta.size();
  report.test_size = test_ds.size();
  report.artifacts.pool_ids = trial.pool.ids;

  // Featurizer statistics come from the training split (pool + meta) only.
  FeaturizerSpec fspec = cfg.featurizer;
  fspec.seed = derive_seed(cfg.featurizer.seed ^ seed, "featurizer");
  LabeledDataset pool, meta, test;
  timed_stage("featurize", times.featurize, [&] {
    const LabeledDataset fit_on = concat(trial.pool, trial.meta);
    report.audit.touched["featurize"] = fit_on.ids;
    const FittedFeaturizer f = FittedFeaturizer::fit(fit_on, fspec);
    pool = f.apply(trial.pool);
    meta = f.apply(trial.meta);
    test = f.apply(test_ds);
  });

  std::vector<std::size_t> sizes{pool.dim()};
  sizes.insert(sizes.end(), cfg.train.hidden.begin(), cfg.train.hidden.end());
  sizes.push_back(static_cast<std::size_t>(pool.class_count));
  const MlpClassifier model_template = MlpClassifier::init(sizes, derive_seed(seed, "model-init"));
  TrainConfig tcfg = cfg.train.train;
  tcfg.seed = derive_seed(seed, "train");
  MetaConfig mcfg = cfg.meta;
  mcfg.seed = derive_seed(cfg.meta.seed ^ seed, "meta");

  LabeledDataset train_rows;
  std::vector<double> train_weights;

  auto select = [&](CoresetStrategy strategy, double ratio) {
    return timed_stage("select", times.select, [&] {
      report.audit.touched["select"] = pool.ids;
      return strategy == CoresetStrategy::kModerate ? select_moderate(pool, ratio)
                                                    : select_random(pool, ratio, derive_seed(seed, "select"));
    });
  };

  switch (arm) {
    case MethodArm::kErm:
      train_rows = pool;
      train_weights.assign(pool.size(), 1.0);
      break;

    case MethodArm::kCrErm:
    case MethodArm::kCmsErm: {
      const auto strategy = arm == MethodArm::kCrErm ? CoresetStrategy::kRandom : CoresetStrategy::kModerate;
      CoresetSelection sel = select(strategy, cfg.coreset.ratio);
      train_rows = pool.subset(sel.indices);
      train_weights.assign(train_rows.size(), 1.0);
      report.coreset.size = sel.size();
      for (const std::size_t i : sel.indices) report.coreset.flipped += trial.flip_mask[i];
      report.artifacts.selection = std::move(sel);
      break;
    }

    case MethodArm::kWErm:
    case MethodArm::kCwErm: {
      const double ratio = arm == MethodArm::kWErm ? 1.0 : cfg.coreset.ratio;
      CoresetSelection sel = select(arm == MethodArm::kWErm ? CoresetStrategy::kModerate : cfg.coreset.strategy, ratio);
      CoresetWeights cw = timed_stage("reweight", times.reweight, [&] {
        auto ids = ids_at(pool, sel.indices);
        ids.insert(ids.end(), meta.ids.begin(), meta.ids.end());
        report.audit.touched["reweight"] = std::move(ids);
        return reweight_coreset(pool, sel, meta, model_template, mcfg);
      });
      BroadcastWeights bw = timed_stage("broadcast", times.broadcast, [&] {
        report.audit.touched["broadcast"] = pool.ids;
        return broadcast_weights(pool.features, sel, cw, "featurized");
      });
      train_rows = pool;
      train_weights = bw.w_star;

      report.coreset.size = sel.size();
      double flipped_sum = 0.0, clean_sum = 0.0;
      std::size_t clean = 0;
      for (std::size_t k = 0; k < sel.size(); ++k) {
        if (trial.flip_mask[sel.indices[k]]) {
          ++report.coreset.flipped;
          flipped_sum += cw.weights[k];
        } else {
          ++clean;
          clean_sum += cw.weights[k];
        }
      }
      if (report.coreset.flipped > 0) {
        report.coreset.mean_weight_flipped = flipped_sum / static_cast<double>(report.coreset.flipped);
      }
      if (clean > 0) report.coreset.mean_weight_clean = clean_sum / static_cast<double>(clean);
      report.artifacts.selection = std::move(sel);
      report.artifacts.coreset_weights = std::move(cw);
      report.artifacts.broadcast = std::move(bw);
      break;
    }
  }

  TrainResult trained = timed_stage("train", times.train, [&] {
    report.audit.touched["train"] = train_rows.ids;
    return train_weighted(model_template, train_rows, train_weights, tcfg);
  });
  report.train_rows = train_rows.size();
  report.audit.touched["evaluate"] = test.ids;
  report.test_accuracy = evaluate(trained.model, test);
  report.artifacts.model = std::move(trained.model);
  report.artifacts.history = std::move(trained.history);

  Json meta_info;
  meta_info["coreset_quota"] = "per-class max(1, round_half_even(ratio * n_c))";
  meta_info["batch_weight_renormalization"] = "divide by max(batch weight sum, 1e-12)";
  meta_info["broadcast_space"] = "featurized";
  meta_info["featurizer_fit"] = "training split (pool + meta)";
  meta_info["meta_set"] = "clean, balanced, carved from the training split before label noise";
  meta_info["weight_normalization"] = "mean1 over the coreset";
  meta_info["reweight_steps"] = arm == MethodArm::kWErm || arm == MethodArm::kCwErm
                                    ? Json(meta_step_count(mcfg, report.coreset.size))
                                    : Json(0);
  meta_info["label_map"] = train_ds.label_names;
  meta_info["test_isolated"] = report.audit.test_isolated();
  report.metadata = std::move(meta_info);
  report.total_seconds = seconds_since(run_start);
  return report;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (const double v : values) total += v;
  const double mean = total / static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SweepReport ratio_sweep(const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                        std::span<const double> ratios, std::span<const std::uint64_t> seeds, const RunConfig& cfg) {
  if (seeds.empty()) throw invalid_argument("ratio_sweep needs at least one seed");
  for (const double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw invalid_argument("sweep ratios must be in (0, 1]");
  }
  SweepReport report;
  report.config = to_json(cfg);

  auto run_row = [&](SweepRow row, const RunConfig& run_cfg) {
    std::vector<double> acc, reweight, total;
    for (const std::uint64_t seed : seeds) {
      row.seeds.push_back(seed);
      try {
        const RunReport r = run_method(row.method, train_ds, test_ds, run_cfg, seed);
        row.accuracies.push_back(r.test_accuracy);
        acc.push_back(r.test_accuracy);
        reweight.push_back(r.stage_times.reweight);
        total.push_back(r.total_seconds);
      } catch (const std::exception& e) {
        row.accuracies.push_back(std::nullopt);
        row.failures.push_back({seed, e.what()});
      }
    }
    row.accuracy = summarize(acc);
    row.reweight_seconds = summarize(reweight);
    row.total_seconds = summarize(total);
    report.rows.push_back(std::move(row));
  };

  for (const double r : ratios) {
    RunConfig run_cfg = cfg;
    run_cfg.coreset.ratio = r;
    SweepRow row;
    row.label = "ratio=" + Json(r).dump();
    row.ratio = r;
    row.method = MethodArm::kCwErm;
    run_row(std::move(row), run_cfg);
  }
  SweepRow baseline;
  baseline.label = "uniform";
  baseline.method = MethodArm::kErm;
  run_row(std::move(baseline), cfg);
  return report;
}

CompareReport compare(const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                      std::span<const MethodArm> arms, std::span<const std::uint64_t> seeds, const RunConfig& cfg) {
  if (seeds.empty()) throw invalid_argument("compare needs at least one seed");
  CompareReport report;
  report.config = to_json(cfg);
  for (const MethodArm arm : arms) {
    CompareRow row;
    row.method = arm;
    std::vector<double> acc, total;
    std::map<std::string, std::vector<double>> stages;
    for (const std::uint64_t seed : seeds) {
      row.seeds.push_back(seed);
      try {
        RunReport r = run_method(arm, train_ds, test_ds, cfg, seed);
        row.accuracies.push_back(r.test_accuracy);
        acc.push_back(r.test_accuracy);
        total.push_back(r.total_seconds);
        stages["featurize"].push_back(r.stage_times.featurize);
        stages["select"].push_back(r.stage_times.select);
        stages["reweight"].push_back(r.stage_times.reweight);
        stages["broadcast"].push_back(r.stage_times.broadcast);
        stages["train"].push_back(r.stage_times.train);
        report.runs.push_back(std::move(r));
      } catch (const std::exception& e) {
        row.accuracies.push_back(std::nullopt);
        row.failures.push_back({seed, e.what()});
      }
    }
    row.accuracy = summarize(acc);
    row.total_seconds = summarize(total);
    for (const auto& [name, values] : stages) row.stage_seconds[name] = summarize(values);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cwerm

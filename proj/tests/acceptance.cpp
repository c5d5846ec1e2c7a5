// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails. `--only A3` runs one criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include "cwerm/broadcast.hpp"
#include "cwerm/pipeline.hpp"

using namespace cwerm;

namespace {

// Tolerances and budgets.
constexpr std::size_t kOracleInstances = 100;
constexpr double kOracleBudgetSeconds = 10.0;
constexpr double kBenchmarkBudgetSeconds = 15.0 * 60.0;
constexpr double kAccuracyGapPoints = 10.0;
constexpr double kReweightTimeFactor = 0.25;
constexpr double kTotalTimeFactor = 0.5;
constexpr std::size_t kRequiredSeeds = 4;
constexpr std::size_t kFdInstances = 20;
constexpr double kFdRelativeError = 1e-4;
constexpr double kFdBudgetSeconds = 30.0;
constexpr double kReductionBudgetSeconds = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

/// Noisy four-blob benchmark: 4000 points in 16 dimensions, 30% label noise
/// on the training pool, coreset ratio 0.05, five seeds.
RunConfig benchmark_config() {
  RunConfig cfg;
  cfg.data.source = "blobs";
  cfg.data.classes = 4;
  cfg.data.n_per_class = 1000;
  cfg.data.dim = 16;
  cfg.data.separation = 8.0;
  cfg.data.spread = 1.5;
  cfg.data.label_noise = 0.3;
  cfg.data.seed = 0;
  cfg.coreset.ratio = 0.05;
  cfg.meta.unit = IterationUnit::kEpoch;
  cfg.meta.iterations = 60;
  cfg.meta.meta_lr = 0.01;
  cfg.meta.inner_lr = 0.1;
  cfg.train.train.epochs = 50;
  cfg.train.train.batch_size = 64;
  cfg.harness.seeds = {0, 1, 2, 3, 4};
  cfg.harness.ratios = {0.01, 0.05, 0.2, 1.0};
  return cfg;
}

struct Benchmark {
  RunConfig cfg = benchmark_config();
  LabeledDataset train;
  LabeledDataset test;

  Benchmark() {
    auto [tr, te] = split_train_test(materialize_dataset(cfg.data), cfg.data);
    train = std::move(tr);
    test = std::move(te);
  }

  CompareReport run_all() const { return compare(train, test, cfg.harness.arms, cfg.harness.seeds, cfg); }
};

const Benchmark& benchmark() {
  static const Benchmark b;
  return b;
}

struct TimedCompare {
  CompareReport report;
  double seconds = 0.0;
};

const TimedCompare& benchmark_compare() {
  static const TimedCompare cached = [] {
    const auto start = std::chrono::steady_clock::now();
    TimedCompare t;
    t.report = benchmark().run_all();
    t.seconds = seconds_since(start);
    return t;
  }();
  return cached;
}

const CompareRow& row_for(const CompareReport& r, MethodArm arm) {
  for (const auto& row : r.rows) {
    if (row.method == arm) return row;
  }
  throw std::runtime_error(std::string("missing arm ") + to_string(arm));
}

const RunReport* run_for(const CompareReport& r, MethodArm arm, std::uint64_t seed) {
  for (const auto& run : r.runs) {
    if (run.method == arm && run.seed == seed) return &run;
  }
  return nullptr;
}

Outcome a1_moderate_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240901);
  std::size_t matches = 0;
  for (std::size_t trial = 0; trial < kOracleInstances; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(4));
    const std::size_t n = static_cast<std::size_t>(k) + rng.uniform_index(200 - k + 1);
    const auto ds = testing::random_dataset(rng, n, 1 + rng.uniform_index(8), k);
    const double ratio = std::max(1e-3, rng.uniform01());
    const auto scores = median_distance_scores(ds, class_medians(ds));
    if (select_moderate(ds, scores, ratio).indices == testing::moderate_oracle(ds, scores, ratio)) ++matches;
  }
  const double secs = seconds_since(start);
  return {matches == kOracleInstances && secs < kOracleBudgetSeconds,
          fmt("%zu/%zu instances match, %.2f s (< %.0f s)", matches, kOracleInstances, secs, kOracleBudgetSeconds)};
}

Outcome a2_broadcast_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240902);
  std::size_t nn_ok = 0;
  std::size_t piecewise_ok = 0;
  std::size_t idempotent_ok = 0;
  for (std::size_t trial = 0; trial < kOracleInstances; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200);
    const std::size_t d = 1 + rng.uniform_index(8);
    const Matrix x = testing::random_matrix(rng, n, d);
    CoresetSelection sel;
    sel.indices = rng.sample_without_replacement(n, 1 + rng.uniform_index(n));
    std::sort(sel.indices.begin(), sel.indices.end());
    CoresetWeights cw;
    cw.indices = sel.indices;
    for (std::size_t j = 0; j < sel.size(); ++j) cw.weights.push_back(rng.uniform(0.0, 2.0));
    const auto b = broadcast_weights(x, sel, cw);

    bool nn = true;
    bool piecewise = true;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t best = testing::nearest_oracle(x, i, sel.indices);
      nn = nn && b.source_index[i] == sel.indices[best];
      piecewise = piecewise && b.w_star[i] == cw.weights[best];
    }
    const std::set<double> distinct(b.w_star.begin(), b.w_star.end());
    piecewise = piecewise && distinct.size() <= sel.size();

    CoresetWeights restricted = cw;
    for (std::size_t j = 0; j < sel.size(); ++j) restricted.weights[j] = b.w_star[sel.indices[j]];
    const auto again = broadcast_weights(x, sel, restricted);
    nn_ok += nn;
    piecewise_ok += piecewise;
    idempotent_ok += again.w_star == b.w_star && again.source_index == b.source_index;
  }
  const double secs = seconds_since(start);
  const bool pass = nn_ok == kOracleInstances && piecewise_ok == kOracleInstances &&
                    idempotent_ok == kOracleInstances && secs < kOracleBudgetSeconds;
  return {pass, fmt("nn %zu/%zu, piecewise %zu/%zu, idempotent %zu/%zu, %.2f s (< %.0f s)", nn_ok, kOracleInstances,
                    piecewise_ok, kOracleInstances, idempotent_ok, kOracleInstances, secs, kOracleBudgetSeconds)};
}

double mean_percent(const CompareRow& row) { return row.accuracy.mean ? 100.0 * *row.accuracy.mean : NAN; }

Outcome a3_orderings() {
  const auto& tc = benchmark_compare();
  const double erm = mean_percent(row_for(tc.report, MethodArm::kErm));
  const double cr = mean_percent(row_for(tc.report, MethodArm::kCrErm));
  const double cms = mean_percent(row_for(tc.report, MethodArm::kCmsErm));
  const double cw = mean_percent(row_for(tc.report, MethodArm::kCwErm));
  const bool vs_erm = cw >= erm;
  const bool vs_cr = cw > cr + kAccuracyGapPoints;
  const bool vs_cms = cw > cms + kAccuracyGapPoints;
  std::size_t cms_flipped = 0;
  for (const auto seed : benchmark().cfg.harness.seeds) {
    if (const auto* r = run_for(tc.report, MethodArm::kCmsErm, seed)) cms_flipped += r->coreset.flipped;
  }
  const bool in_budget = tc.seconds < kBenchmarkBudgetSeconds;
  return {vs_erm && vs_cr && vs_cms && in_budget,
          fmt("CW %.2f vs ERM %.2f [%s], CR %.2f +%.0f [%s], CMS %.2f +%.0f [%s] (CMS coreset flips over seeds: %zu), "
              "%.1f s",
              cw, erm, vs_erm ? "ok" : "no", cr, kAccuracyGapPoints, vs_cr ? "ok" : "no", cms, kAccuracyGapPoints,
              vs_cms ? "ok" : "no", cms_flipped, tc.seconds)};
}

Outcome a4_efficiency() {
  const auto& tc = benchmark_compare();
  std::size_t ok = 0;
  std::string per_seed;
  for (const auto seed : benchmark().cfg.harness.seeds) {
    const auto* cw = run_for(tc.report, MethodArm::kCwErm, seed);
    const auto* w = run_for(tc.report, MethodArm::kWErm, seed);
    if (cw == nullptr || w == nullptr) continue;
    const double rw = cw->stage_times.reweight / w->stage_times.reweight;
    const double total = cw->total_seconds / w->total_seconds;
    // Same meta settings, so both arms make the same number of passes.
    const bool same_iterations = cw->config.at("meta") == w->config.at("meta");
    const bool good = same_iterations && rw <= kReweightTimeFactor && total <= kTotalTimeFactor;
    ok += good;
    per_seed += fmt(" s%llu:%.3f/%.3f%s", static_cast<unsigned long long>(seed), rw, total, good ? "" : "!");
  }
  return {ok >= kRequiredSeeds, fmt("%zu/5 seeds with reweight ratio <= %.2f and total ratio <= %.2f;%s", ok,
                                    kReweightTimeFactor, kTotalTimeFactor, per_seed.c_str())};
}

Outcome a5_meta_gradient() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240905);
  std::size_t ok = 0;
  double worst = 0.0;
  std::size_t redrawn = 0;
  for (std::size_t trial = 0; trial < kFdInstances; ++trial) {
    std::vector<std::size_t> sizes = {1 + rng.uniform_index(4)};
    if (trial % 2) sizes.push_back(1 + rng.uniform_index(5));
    sizes.push_back(2 + rng.uniform_index(2));
    auto model = MlpClassifier::zeros(sizes);
    for (auto& p : model.parameters()) p = 0.7 * rng.normal();
    auto net = WeightNet::zeros(1 + rng.uniform_index(8));
    for (auto& p : net.parameters()) p = rng.normal();
    const int k = static_cast<int>(sizes.back());
    auto batch = testing::random_dataset(rng, std::max<std::size_t>(k, 2 + rng.uniform_index(6)), sizes.front(), k);
    auto meta = testing::random_dataset(rng, std::max<std::size_t>(k, 2 + rng.uniform_index(6)), sizes.front(), k);
    // Equal weights on every batch row make the normalized step, and so the
    // exact meta-gradient, identically zero; relative error is undefined there.
    const auto w = weightnet_forward(net, per_sample_losses(model, batch.features, batch.labels));
    if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); })) {
      ++redrawn;
      --trial;
      continue;
    }
    const double alpha = 0.3;
    const auto analytic = compute_meta_gradient(model, net, batch, meta, alpha).gradient;
    const auto numeric = testing::fd_meta_gradient(model, net, batch, meta, alpha);
    const double err = testing::relative_error(analytic, numeric);
    worst = std::max(worst, err);
    ok += err < kFdRelativeError;
  }
  const double secs = seconds_since(start);
  return {ok == kFdInstances && secs < kFdBudgetSeconds,
          fmt("%zu/%zu instances, worst relative error %.2e (< %.0e), %zu degenerate redrawn, %.2f s", ok,
              kFdInstances, worst, kFdRelativeError, redrawn, secs)};
}

Outcome a6_erm_reduction() {
  const auto start = std::chrono::steady_clock::now();
  const auto ds = make_blobs(3, 60, 5, 4.0, 1.0, 6);
  const auto init = MlpClassifier::init({5, 16, 3}, 17);
  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.batch_size = 23;
  tcfg.seed = 99;
  const std::vector<double> ones(ds.size(), 1.0);
  const bool loop_identical = train_weighted(init, ds, ones, tcfg).model == testing::plain_erm(init, ds, tcfg);

  RunConfig cfg = benchmark().cfg;
  cfg.meta.iterations = 0;
  cfg.meta.init = WeightNetInit::kZero;
  std::size_t equal = 0;
  for (const auto seed : cfg.harness.seeds) {
    const auto erm = run_method(MethodArm::kErm, benchmark().train, benchmark().test, cfg, seed);
    const auto cw = run_method(MethodArm::kCwErm, benchmark().train, benchmark().test, cfg, seed);
    equal += cw.test_accuracy == erm.test_accuracy;
  }
  const double secs = seconds_since(start);
  return {loop_identical && equal == cfg.harness.seeds.size() && secs < kReductionBudgetSeconds,
          fmt("plain loop %s, CW(0 iterations) == ERM on %zu/%zu seeds, %.1f s", loop_identical ? "identical" : "differs",
              equal, cfg.harness.seeds.size(), secs)};
}

Outcome a7_down_weighting() {
  // A seed passes when every reweighting arm whose coreset holds both flipped
  // and clean samples gives the flipped ones a lower mean weight.
  const auto& tc = benchmark_compare();
  std::size_t ok = 0;
  std::string per_seed;
  for (const auto seed : benchmark().cfg.harness.seeds) {
    bool any = false;
    bool good = true;
    for (const MethodArm arm : {MethodArm::kCwErm, MethodArm::kWErm}) {
      const auto* r = run_for(tc.report, arm, seed);
      if (r == nullptr) continue;
      per_seed += fmt(" %s/s%llu flips=%zu/%zu", to_string(arm), static_cast<unsigned long long>(seed),
                      r->coreset.flipped, r->coreset.size);
      if (!r->coreset.mean_weight_flipped || !r->coreset.mean_weight_clean) continue;
      any = true;
      good = good && *r->coreset.mean_weight_flipped < *r->coreset.mean_weight_clean;
      per_seed += fmt(" w=%.4f<%.4f", *r->coreset.mean_weight_flipped, *r->coreset.mean_weight_clean);
    }
    ok += any && good;
  }
  return {ok >= kRequiredSeeds, fmt("%zu/5 seeds;%s", ok, per_seed.c_str())};
}

Outcome a8_sweep_shape() {
  const auto& b = benchmark();
  const auto sweep = ratio_sweep(b.train, b.test, b.cfg.harness.ratios, b.cfg.harness.seeds, b.cfg);
  const std::size_t expected_rows = b.cfg.harness.ratios.size() + 1;
  bool well_formed = sweep.rows.size() == expected_rows && sweep.rows.back().label == "uniform" &&
                     !sweep.rows.back().ratio.has_value();
  std::optional<double> best;
  std::string means;
  for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
    const auto& row = sweep.rows[r];
    well_formed = well_formed && row.failures.empty() && row.accuracies.size() == b.cfg.harness.seeds.size() &&
                  row.accuracy.mean.has_value() && row.accuracy.stddev.has_value();
    for (const auto& a : row.accuracies) well_formed = well_formed && a.has_value();
    if (r < b.cfg.harness.ratios.size()) {
      well_formed = well_formed && row.ratio == b.cfg.harness.ratios[r];
      if (row.accuracy.mean && (!best || *row.accuracy.mean > *best)) best = row.accuracy.mean;
    }
    means += fmt(" %s=%.2f", row.label.c_str(), row.accuracy.mean ? 100.0 * *row.accuracy.mean : NAN);
  }
  const Json j = to_json(sweep);
  well_formed = well_formed && j.at("schema") == kReportSchema && j.at("rows").size() == expected_rows;
  const auto& baseline = sweep.rows.back().accuracy.mean;
  const bool beats = best && baseline && *best >= *baseline;
  return {well_formed && beats,
          fmt("%s, best ratio %s baseline;%s", well_formed ? "well-formed" : "malformed", beats ? ">=" : "<",
              means.c_str())};
}

Outcome a9_determinism() {
  const auto& first = benchmark_compare().report;
  const auto second = benchmark().run_all();
  bool same = first.rows.size() == second.rows.size() && first.runs.size() == second.runs.size();
  for (std::size_t r = 0; same && r < first.rows.size(); ++r) {
    same = first.rows[r].accuracies == second.rows[r].accuracies;
  }
  for (std::size_t i = 0; same && i < first.runs.size(); ++i) {
    const auto& a = first.runs[i];
    const auto& b = second.runs[i];
    same = a.test_accuracy == b.test_accuracy && a.artifacts.model == b.artifacts.model &&
           a.artifacts.selection == b.artifacts.selection;
    if (same && a.artifacts.broadcast) same = a.artifacts.broadcast->w_star == b.artifacts.broadcast->w_star;
  }
  return {same, fmt("%zu runs compared on accuracy, model, selection and weights: %s", first.runs.size(),
                    same ? "bit-identical" : "differ")};
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string only;
  app.add_option("--only", only, "Run a single criterion, e.g. A3");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"A1", "moderate selection oracle", a1_moderate_oracle},
      {"A2", "broadcast oracle and invariants", a2_broadcast_oracle},
      {"A3", "accuracy orderings on noisy blobs", a3_orderings},
      {"A4", "reweighting efficiency", a4_efficiency},
      {"A5", "meta-gradient finite differences", a5_meta_gradient},
      {"A6", "ERM reduction", a6_erm_reduction},
      {"A7", "noisy samples down-weighted", a7_down_weighting},
      {"A8", "ratio sweep shape", a8_sweep_shape},
      {"A9", "determinism", a9_determinism},
  };

  bool selected_any = false;
  bool all_pass = true;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.id) continue;
    selected_any = true;
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    all_pass = all_pass && out.pass;
    std::printf("[%s] %s %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.title, out.detail.c_str());
    std::fflush(stdout);
  }
  if (!selected_any) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return all_pass ? 0 : 1;
}

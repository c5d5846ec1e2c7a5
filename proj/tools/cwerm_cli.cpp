// Command-line front end: dataset generation, the individual stages, and the
// run / sweep / compare harness. Exit codes: 0 ok, 2 config error, 3 failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"

#include "cwerm/pipeline.hpp"
#include "cwerm/random.hpp"

namespace fs = std::filesystem;
using namespace cwerm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> methods;
  std::vector<double> ratios;
};

RunConfig load_config(const Common& c) { return c.config.empty() ? RunConfig{} : load_run_config(c.config); }

/// Bad flag values are configuration errors, not runtime failures.
template <class F>
auto flag_value(const char* flag, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    throw config_error(std::string(flag) + ": " + e.what());
  }
}

void check_ratios(const Common& c) {
  for (const double r : c.ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw config_error("--ratio must be in (0, 1]");
  }
}

MethodArm arm_flag(const std::string& name) {
  return flag_value("--method", [&] { return method_arm_from_string(name); });
}

fs::path out_dir(const Common& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::uint64_t seed_or(const Common& c, std::uint64_t fallback) { return c.seed.value_or(fallback); }

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

Json envelope(const char* command) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  return j;
}

/// Re-expresses `ds` labels in the token order of `names`. Datasets written by
/// `gen` are read back with first-appearance label maps, which may differ.
LabeledDataset align_labels(LabeledDataset ds, const std::vector<std::string>& names) {
  if (ds.label_names.empty() || names.empty()) return ds;
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], static_cast<int>(i));
  for (auto& y : ds.labels) {
    const auto it = index.find(ds.label_names[static_cast<std::size_t>(y)]);
    if (it == index.end()) {
      throw invalid_argument("label '" + ds.label_names[static_cast<std::size_t>(y)] +
                             "' does not occur in the reference dataset");
    }
    y = it->second;
  }
  ds.label_names = names;
  ds.class_count = static_cast<int>(names.size());
  return ds;
}

MlpClassifier model_template_for(const LabeledDataset& ds, const RunConfig& cfg, std::uint64_t seed) {
  std::vector<std::size_t> sizes{ds.dim()};
  sizes.insert(sizes.end(), cfg.train.hidden.begin(), cfg.train.hidden.end());
  sizes.push_back(static_cast<std::size_t>(ds.class_count));
  return MlpClassifier::init(sizes, derive_seed(seed, "model-init"));
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Subcommands ----------------------------------------------------------------

void cmd_gen(const Common& c) {
  RunConfig cfg = load_config(c);
  if (c.seed) cfg.data.seed = *c.seed;
  const fs::path dir = out_dir(c);
  const LabeledDataset all = materialize_dataset(cfg.data);
  const auto [train, test] = split_train_test(all, cfg.data);
  const TrialData trial = prepare_trial(train, cfg, cfg.data.seed);
  write_csv(all, dir / "data.csv");
  write_csv(trial.pool, dir / "pool.csv");
  write_csv(trial.meta, dir / "meta.csv");
  write_csv(test, dir / "test.csv");

  Json j = envelope("gen");
  j["rows"] = {{"data", all.size()}, {"pool", trial.pool.size()}, {"meta", trial.meta.size()}, {"test", test.size()}};
  std::vector<SampleId> flipped;
  for (std::size_t i = 0; i < trial.pool.size(); ++i) {
    if (trial.flip_mask[i]) flipped.push_back(trial.pool.ids[i]);
  }
  j["flipped_ids"] = flipped;
  j["config"] = to_json(cfg);
  write_json(dir / "report.json", j);
}

void cmd_featurize(const Common& c, const std::vector<std::string>& inputs, const std::vector<std::string>& apply) {
  RunConfig cfg = load_config(c);
  const fs::path dir = out_dir(c);
  std::vector<LabeledDataset> fit_sets;
  for (const auto& p : inputs) fit_sets.push_back(load_csv(p));

  // Only feature statistics matter for fitting, so labels are dropped here.
  LabeledDataset fit_on;
  std::vector<double> values;
  for (const auto& ds : fit_sets) {
    if (ds.dim() != fit_sets.front().dim()) throw dimension_mismatch("featurize inputs differ in dimension");
    values.insert(values.end(), ds.features.values().begin(), ds.features.values().end());
  }
  const std::size_t rows = values.size() / fit_sets.front().dim();
  fit_on.features = Matrix(rows, fit_sets.front().dim(), std::move(values));
  fit_on.labels.assign(rows, 0);
  fit_on.ids.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) fit_on.ids[i] = static_cast<SampleId>(i);
  fit_on.class_count = 1;

  FeaturizerSpec spec = cfg.featurizer;
  if (c.seed) spec.seed = *c.seed;
  const FittedFeaturizer f = FittedFeaturizer::fit(fit_on, spec);

  Json j = envelope("featurize");
  j["featurizer"] = {{"kind", to_string(spec.kind)}, {"input_dim", f.input_dim()}, {"output_dim", f.output_dim()}};
  Json written = Json::array();
  auto emit = [&](const std::string& path, const LabeledDataset& ds) {
    const fs::path target = dir / (stem_of(path) + ".features.csv");
    write_csv(f.apply(ds), target);
    written.push_back(target.string());
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) emit(inputs[i], fit_sets[i]);
  for (const auto& p : apply) emit(p, load_csv(p));
  j["outputs"] = written;
  write_json(dir / "report.json", j);
}

void cmd_select(const Common& c, const std::string& input) {
  RunConfig cfg = load_config(c);
  if (!c.ratios.empty()) cfg.coreset.ratio = c.ratios.front();
  if (!c.methods.empty()) {
    cfg.coreset.strategy = flag_value("--method", [&] { return coreset_strategy_from_string(c.methods.front()); });
  }
  const fs::path dir = out_dir(c);
  const LabeledDataset ds = load_csv(input);
  const std::uint64_t seed = seed_or(c, 0);
  const CoresetSelection sel = cfg.coreset.strategy == CoresetStrategy::kModerate
                                   ? select_moderate(ds, cfg.coreset.ratio)
                                   : select_random(ds, cfg.coreset.ratio, derive_seed(seed, "select"));
  write_json(dir / "selection.json", to_json(sel));
  Json j = envelope("select");
  j["input"] = input;
  j["rows"] = ds.size();
  j["selected"] = sel.size();
  write_json(dir / "report.json", j);
}

void cmd_reweight(const Common& c, const std::string& input, const std::string& selection_path,
                  const std::string& meta_path) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = out_dir(c);
  const LabeledDataset ds = load_csv(input);
  const CoresetSelection sel = selection_from_json(read_json_file(selection_path));
  check_selection(sel, ds.size());
  const std::uint64_t seed = seed_or(c, 0);
  MetaConfig mcfg = cfg.meta;
  mcfg.seed = derive_seed(cfg.meta.seed ^ seed, "meta");
  const MlpClassifier model = model_template_for(ds, cfg, seed);
  const CoresetWeights cw = meta_path.empty()
                                ? reweight_coreset(ds, sel, model, mcfg)
                                : reweight_coreset(ds, sel, align_labels(load_csv(meta_path), ds.label_names),
                                                   model, mcfg);
  write_json(dir / "coreset_weights.json", to_json(cw));
  Json j = envelope("reweight");
  j["coreset_size"] = sel.size();
  j["meta_steps"] = cw.meta_loss_trace.size();
  j["final_meta_loss"] = cw.meta_loss_trace.empty() ? Json(nullptr) : Json(cw.meta_loss_trace.back());
  write_json(dir / "report.json", j);
}

void cmd_broadcast(const Common& c, const std::string& input, const std::string& selection_path,
                   const std::string& weights_path) {
  const fs::path dir = out_dir(c);
  const LabeledDataset ds = load_csv(input);
  const CoresetSelection sel = selection_from_json(read_json_file(selection_path));
  check_selection(sel, ds.size());
  const CoresetWeights cw = coreset_weights_from_json(read_json_file(weights_path));
  const BroadcastWeights bw = broadcast_weights(ds.features, sel, cw);
  write_weights_csv(bw, ds.ids, dir / "weights.csv");
  Json j = envelope("broadcast");
  j["rows"] = ds.size();
  j["coreset_size"] = sel.size();
  write_json(dir / "report.json", j);
}

void cmd_train(const Common& c, const std::string& input, const std::string& weights_path,
               const std::string& test_path) {
  const RunConfig cfg = load_config(c);
  const fs::path dir = out_dir(c);
  const LabeledDataset ds = load_csv(input);
  std::vector<double> weights(ds.size(), 1.0);
  if (!weights_path.empty()) {
    const WeightsTable table = read_weights_csv(weights_path);
    if (table.ids != ds.ids) throw dimension_mismatch("weights.csv ids do not match the training rows");
    weights = table.weights;
  }
  const std::uint64_t seed = seed_or(c, 0);
  TrainConfig tcfg = cfg.train.train;
  tcfg.seed = derive_seed(seed, "train");
  const TrainResult trained = train_weighted(model_template_for(ds, cfg, seed), ds, weights, tcfg);
  write_text_file(dir / "model.json", model_to_json_text(trained.model));

  Json j = envelope("train");
  j["rows"] = ds.size();
  j["epoch_mean_loss"] = trained.history.mean_loss;
  j["train_accuracy"] = evaluate(trained.model, ds);
  if (!test_path.empty()) {
    j["test_accuracy"] = evaluate(trained.model, align_labels(load_csv(test_path), ds.label_names));
  }
  write_json(dir / "report.json", j);
}

struct Splits {
  RunConfig cfg;
  LabeledDataset train;
  LabeledDataset test;
};

Splits load_splits(const Common& c) {
  Splits s;
  s.cfg = load_config(c);
  auto [train, test] = split_train_test(materialize_dataset(s.cfg.data), s.cfg.data);
  s.train = std::move(train);
  s.test = std::move(test);
  return s;
}

void cmd_run(const Common& c) {
  Splits s = load_splits(c);
  if (!c.ratios.empty()) s.cfg.coreset.ratio = c.ratios.front();
  const MethodArm arm = c.methods.empty() ? MethodArm::kCwErm : arm_flag(c.methods.front());
  const std::uint64_t seed = seed_or(c, s.cfg.harness.seeds.front());
  const fs::path dir = out_dir(c);
  const RunReport r = run_method(arm, s.train, s.test, s.cfg, seed);

  write_json(dir / "report.json", to_json(r));
  write_text_file(dir / "table.txt", run_table_text(r));
  write_text_file(dir / "model.json", model_to_json_text(r.artifacts.model));
  if (r.artifacts.selection) write_json(dir / "selection.json", to_json(*r.artifacts.selection));
  if (r.artifacts.coreset_weights) write_json(dir / "coreset_weights.json", to_json(*r.artifacts.coreset_weights));
  if (r.artifacts.broadcast) write_weights_csv(*r.artifacts.broadcast, r.artifacts.pool_ids, dir / "weights.csv");
  std::fputs(run_table_text(r).c_str(), stdout);
}

std::vector<std::uint64_t> seeds_for(const Common& c, const RunConfig& cfg) {
  return c.seed ? std::vector<std::uint64_t>{*c.seed} : cfg.harness.seeds;
}

void cmd_sweep(const Common& c) {
  Splits s = load_splits(c);
  const std::vector<double> ratios = c.ratios.empty() ? s.cfg.harness.ratios : c.ratios;
  const fs::path dir = out_dir(c);
  const SweepReport r = ratio_sweep(s.train, s.test, ratios, seeds_for(c, s.cfg), s.cfg);
  write_json(dir / "report.json", to_json(r));
  write_text_file(dir / "table.txt", sweep_table_text(r));
  write_text_file(dir / "sweep.csv", sweep_csv_text(r));
  std::fputs(sweep_table_text(r).c_str(), stdout);
}

void cmd_compare(const Common& c) {
  Splits s = load_splits(c);
  if (!c.ratios.empty()) s.cfg.coreset.ratio = c.ratios.front();
  std::vector<MethodArm> arms = s.cfg.harness.arms;
  if (!c.methods.empty()) {
    arms.clear();
    for (const auto& m : c.methods) arms.push_back(arm_flag(m));
  }
  const fs::path dir = out_dir(c);
  const CompareReport r = compare(s.train, s.test, arms, seeds_for(c, s.cfg), s.cfg);
  write_json(dir / "report.json", to_json(r));
  write_text_file(dir / "table.txt", compare_table_text(r));
  std::fputs(compare_table_text(r).c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coreset-restricted meta-reweighting for noisy-label training"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration");
    sub->add_option("--seed", common.seed, "Seed override");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
  };

  std::vector<std::string> inputs, applies;
  std::string input, selection, weights, meta, test;

  auto* gen = app.add_subcommand("gen", "Generate the configured dataset and its pool/meta/test splits as CSV");
  add_common(gen);

  auto* featurize = app.add_subcommand("featurize", "Fit a featurizer on --input files and transform them");
  add_common(featurize);
  featurize->add_option("--input", inputs, "CSV to fit on and transform (repeatable)")->required();
  featurize->add_option("--apply", applies, "CSV to transform with the fitted featurizer (repeatable)");

  auto* select = app.add_subcommand("select", "Select a coreset; writes selection.json");
  add_common(select);
  select->add_option("--input", input, "Featurized dataset CSV")->required();
  select->add_option("--method", common.methods, "Coreset strategy: moderate or random")->expected(1);
  select->add_option("--ratio", common.ratios, "Coreset ratio in (0, 1]")->expected(1);

  auto* reweight = app.add_subcommand("reweight", "Meta-reweight a coreset; writes coreset_weights.json");
  add_common(reweight);
  reweight->add_option("--input", input, "Featurized dataset CSV")->required();
  reweight->add_option("--selection", selection, "selection.json")->required();
  reweight->add_option("--meta", meta, "Clean meta set CSV; defaults to rows outside the coreset");

  auto* broadcast = app.add_subcommand("broadcast", "Spread coreset weights to every row; writes weights.csv");
  add_common(broadcast);
  broadcast->add_option("--input", input, "Featurized dataset CSV")->required();
  broadcast->add_option("--selection", selection, "selection.json")->required();
  broadcast->add_option("--weights", weights, "coreset_weights.json")->required();

  auto* train = app.add_subcommand("train", "Weighted ERM training; writes model.json");
  add_common(train);
  train->add_option("--input", input, "Featurized dataset CSV")->required();
  train->add_option("--weights", weights, "weights.csv aligned with --input; unit weights if omitted");
  train->add_option("--test", test, "Featurized test CSV to report accuracy on");

  auto* run = app.add_subcommand("run", "Run one method arm end to end");
  add_common(run);
  run->add_option("--method", common.methods, "ERM, W-ERM, CR-ERM, CMS-ERM or CW-ERM")->expected(1);
  run->add_option("--ratio", common.ratios, "Coreset ratio override")->expected(1);

  auto* sweep = app.add_subcommand("sweep", "Coreset-ratio sweep with a uniform-weight baseline");
  add_common(sweep);
  sweep->add_option("--ratio", common.ratios, "Ratios to sweep (repeatable); defaults to harness.ratios");

  auto* cmp = app.add_subcommand("compare", "Compare method arms across seeds");
  add_common(cmp);
  cmp->add_option("--method", common.methods, "Arms to compare (repeatable); defaults to harness.arms");
  cmp->add_option("--ratio", common.ratios, "Coreset ratio override")->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    check_ratios(common);
    if (*gen) cmd_gen(common);
    else if (*featurize) cmd_featurize(common, inputs, applies);
    else if (*select) cmd_select(common, input);
    else if (*reweight) cmd_reweight(common, input, selection, meta);
    else if (*broadcast) cmd_broadcast(common, input, selection, weights);
    else if (*train) cmd_train(common, input, weights, test);
    else if (*run) cmd_run(common);
    else if (*sweep) cmd_sweep(common);
    else if (*cmp) cmd_compare(common);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

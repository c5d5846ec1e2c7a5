#include "cwerm/config.hpp"

#include <set>

namespace cwerm {

const char* to_string(MethodArm arm) {
  switch (arm) {
    case MethodArm::kErm: return "ERM";
    case MethodArm::kWErm: return "W-ERM";
    case MethodArm::kCrErm: return "CR-ERM";
    case MethodArm::kCmsErm: return "CMS-ERM";
    case MethodArm::kCwErm: return "CW-ERM";
  }
  return "unknown";
}

MethodArm method_arm_from_string(const std::string& name) {
  for (const MethodArm arm : kAllArms) {
    if (name == to_string(arm)) return arm;
  }
  throw invalid_argument("unknown method '" + name + "' (expected ERM, W-ERM, CR-ERM, CMS-ERM or CW-ERM)");
}

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(where + "." + key + ": " + e.what());
  }
}

// Wraps enum parsing and validation failures as config errors.
template <typename F>
void as_config(const std::string& where, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw config_error(where + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw config_error(where + ": " + e.what());
  }
}

DataConfig parse_data(const Json& j) {
  const std::string w = "data";
  reject_unknown(j, {"source", "classes", "n_per_class", "dim", "separation", "spread", "n", "noise_std",
                     "path", "seed", "test_fraction", "label_noise"},
                 w);
  DataConfig d;
  read_if(j, "source", d.source, w);
  read_if(j, "classes", d.classes, w);
  read_if(j, "n_per_class", d.n_per_class, w);
  read_if(j, "dim", d.dim, w);
  read_if(j, "separation", d.separation, w);
  read_if(j, "spread", d.spread, w);
  read_if(j, "n", d.n, w);
  read_if(j, "noise_std", d.noise_std, w);
  read_if(j, "path", d.path, w);
  read_if(j, "seed", d.seed, w);
  read_if(j, "test_fraction", d.test_fraction, w);
  read_if(j, "label_noise", d.label_noise, w);
  if (d.source != "blobs" && d.source != "moons" && d.source != "csv") {
    throw config_error("data.source must be blobs, moons or csv");
  }
  if (d.source == "csv" && d.path.empty()) throw config_error("data.path is required for csv source");
  if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) throw config_error("data.test_fraction must be in (0, 1)");
  if (!(d.label_noise >= 0.0 && d.label_noise <= 1.0)) throw config_error("data.label_noise must be in [0, 1]");
  return d;
}

FeaturizerSpec parse_featurizer(const Json& j, FeaturizerSpec spec) {
  const std::string w = "featurizer";
  reject_unknown(j, {"kind", "output_dim", "seed"}, w);
  as_config(w, [&] {
    if (j.contains("kind")) spec.kind = featurizer_kind_from_string(j["kind"].get<std::string>());
  });
  read_if(j, "output_dim", spec.output_dim, w);
  read_if(j, "seed", spec.seed, w);
  const bool needs_dim = spec.kind == FeaturizerKind::kPca || spec.kind == FeaturizerKind::kRandomProjection;
  if (needs_dim && spec.output_dim < 1) throw config_error("featurizer.output_dim must be >= 1");
  return spec;
}

CoresetConfig parse_coreset(const Json& j) {
  const std::string w = "coreset";
  reject_unknown(j, {"ratio", "strategy"}, w);
  CoresetConfig c;
  read_if(j, "ratio", c.ratio, w);
  as_config(w, [&] {
    if (j.contains("strategy")) c.strategy = coreset_strategy_from_string(j["strategy"].get<std::string>());
  });
  if (!(c.ratio > 0.0 && c.ratio <= 1.0)) throw config_error("coreset.ratio must be in (0, 1]");
  return c;
}

TrainSection parse_train(const Json& j) {
  const std::string w = "train";
  reject_unknown(j, {"hidden", "learning_rate", "momentum", "weight_decay", "epochs", "batch_size"}, w);
  TrainSection t;
  read_if(j, "hidden", t.hidden, w);
  read_if(j, "learning_rate", t.train.learning_rate, w);
  read_if(j, "momentum", t.train.momentum, w);
  read_if(j, "weight_decay", t.train.weight_decay, w);
  read_if(j, "epochs", t.train.epochs, w);
  read_if(j, "batch_size", t.train.batch_size, w);
  as_config(w, [&] { t.train.validate(); });
  for (const std::size_t h : t.hidden) {
    if (h < 1) throw config_error("train.hidden sizes must be >= 1");
  }
  return t;
}

HarnessConfig parse_harness(const Json& j) {
  const std::string w = "harness";
  reject_unknown(j, {"seeds", "arms", "ratios"}, w);
  HarnessConfig h;
  read_if(j, "seeds", h.seeds, w);
  read_if(j, "ratios", h.ratios, w);
  as_config(w, [&] {
    if (j.contains("arms")) {
      h.arms.clear();
      for (const auto& a : j["arms"]) h.arms.push_back(method_arm_from_string(a.get<std::string>()));
    }
  });
  if (h.seeds.empty()) throw config_error("harness.seeds must be nonempty");
  for (const double r : h.ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw config_error("harness.ratios entries must be in (0, 1]");
  }
  return h;
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  reject_unknown(j, {"data", "featurizer", "coreset", "meta", "train", "harness"}, "config");
  RunConfig cfg;
  if (j.contains("data")) cfg.data = parse_data(j["data"]);
  if (j.contains("featurizer")) cfg.featurizer = parse_featurizer(j["featurizer"], cfg.featurizer);
  if (j.contains("coreset")) cfg.coreset = parse_coreset(j["coreset"]);
  if (j.contains("meta")) cfg.meta = meta_config_from_json(j["meta"], cfg.meta);
  if (j.contains("train")) cfg.train = parse_train(j["train"]);
  if (j.contains("harness")) cfg.harness = parse_harness(j["harness"]);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  return run_config_from_json(j);
}

Json to_json(const RunConfig& cfg) {
  Json j;
  auto& d = j["data"];
  d["source"] = cfg.data.source;
  d["classes"] = cfg.data.classes;
  d["n_per_class"] = cfg.data.n_per_class;
  d["dim"] = cfg.data.dim;
  d["separation"] = cfg.data.separation;
  d["spread"] = cfg.data.spread;
  d["n"] = cfg.data.n;
  d["noise_std"] = cfg.data.noise_std;
  d["path"] = cfg.data.path;
  d["seed"] = cfg.data.seed;
  d["test_fraction"] = cfg.data.test_fraction;
  d["label_noise"] = cfg.data.label_noise;

  auto& f = j["featurizer"];
  f["kind"] = to_string(cfg.featurizer.kind);
  f["output_dim"] = cfg.featurizer.output_dim;
  f["seed"] = cfg.featurizer.seed;

  j["coreset"] = {{"ratio", cfg.coreset.ratio}, {"strategy", to_string(cfg.coreset.strategy)}};
  j["meta"] = to_json(cfg.meta);

  auto& t = j["train"];
  t["hidden"] = cfg.train.hidden;
  t["learning_rate"] = cfg.train.train.learning_rate;
  t["momentum"] = cfg.train.train.momentum;
  t["weight_decay"] = cfg.train.train.weight_decay;
  t["epochs"] = cfg.train.train.epochs;
  t["batch_size"] = cfg.train.train.batch_size;

  auto& h = j["harness"];
  h["seeds"] = cfg.harness.seeds;
  Json arms = Json::array();
  for (const MethodArm a : cfg.harness.arms) arms.push_back(to_string(a));
  h["arms"] = arms;
  h["ratios"] = cfg.harness.ratios;
  return j;
}

LabeledDataset materialize_dataset(const DataConfig& cfg) {
  if (cfg.source == "blobs") {
    return make_blobs(cfg.classes, cfg.n_per_class, cfg.dim, cfg.separation, cfg.spread, cfg.seed);
  }
  if (cfg.source == "moons") return make_two_moons(cfg.n, cfg.noise_std, cfg.seed);
  if (cfg.source == "csv") return load_csv(cfg.path);
  throw config_error("unknown data source '" + cfg.source + "'");
}

}  // namespace cwerm

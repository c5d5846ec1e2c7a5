#include "cwerm/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cwerm {

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

}  // namespace

Json to_json(const CoresetSelection& selection) {
  Json j;
  j["strategy"] = to_string(selection.strategy);
  j["ratio"] = selection.ratio;
  j["seed"] = selection.seed ? Json(*selection.seed) : Json(nullptr);
  j["indices"] = selection.indices;
  return j;
}

CoresetSelection selection_from_json(const Json& j) {
  try {
    CoresetSelection s;
    s.strategy = coreset_strategy_from_string(j.at("strategy").get<std::string>());
    s.ratio = j.at("ratio").get<double>();
    if (!j.at("seed").is_null()) s.seed = j.at("seed").get<std::uint64_t>();
    s.indices = j.at("indices").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed selection document: ") + e.what());
  }
}

Json to_json(const MetaConfig& cfg) {
  Json j;
  j["inner_lr"] = cfg.inner_lr;
  j["meta_lr"] = cfg.meta_lr;
  j["iterations"] = cfg.iterations;
  j["iteration_unit"] = to_string(cfg.unit);
  j["coreset_batch"] = cfg.coreset_batch;
  j["meta_batch"] = cfg.meta_batch;
  j["meta_per_class"] = cfg.meta_per_class;
  j["hidden_size"] = cfg.hidden_size;
  j["init"] = to_string(cfg.init);
  j["seed"] = cfg.seed;
  return j;
}

MetaConfig meta_config_from_json(const Json& j, const MetaConfig& defaults) {
  const std::string where = "meta";
  reject_unknown(j, {"inner_lr", "meta_lr", "iterations", "iteration_unit", "coreset_batch", "meta_batch",
                     "meta_per_class", "hidden_size", "init", "seed"},
                 where);
  MetaConfig cfg = defaults;
  read_if(j, "inner_lr", cfg.inner_lr, where);
  read_if(j, "meta_lr", cfg.meta_lr, where);
  read_if(j, "iterations", cfg.iterations, where);
  read_if(j, "coreset_batch", cfg.coreset_batch, where);
  read_if(j, "meta_batch", cfg.meta_batch, where);
  read_if(j, "meta_per_class", cfg.meta_per_class, where);
  read_if(j, "hidden_size", cfg.hidden_size, where);
  read_if(j, "seed", cfg.seed, where);
  try {
    if (j.contains("iteration_unit")) cfg.unit = iteration_unit_from_string(j["iteration_unit"].get<std::string>());
    if (j.contains("init")) cfg.init = weightnet_init_from_string(j["init"].get<std::string>());
    cfg.validate();
  } catch (const Error& e) {
    throw config_error(std::string("meta: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("meta: ") + e.what());
  }
  return cfg;
}

Json to_json(const CoresetWeights& weights) {
  Json j;
  j["indices"] = weights.indices;
  j["weights"] = weights.weights;
  j["normalization"] = weights.normalization;
  j["config"] = to_json(weights.config);
  return j;
}

CoresetWeights coreset_weights_from_json(const Json& j) {
  try {
    CoresetWeights w;
    w.indices = j.at("indices").get<std::vector<std::size_t>>();
    w.weights = j.at("weights").get<std::vector<double>>();
    w.normalization = j.at("normalization").get<std::string>();
    if (j.contains("config")) w.config = meta_config_from_json(j["config"]);
    if (w.indices.size() != w.weights.size()) {
      throw dimension_mismatch("coreset weights document: indices and weights differ in length");
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed coreset weights document: ") + e.what());
  }
}

namespace {

void append_real(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_real(out, values[i]);
  }
  out += ']';
}

}  // namespace

std::string model_to_json_text(const MlpClassifier& model) {
  std::string out = "{\n  \"format\": \"cwerm-mlp\",\n  \"layer_sizes\": [";
  const auto& sizes = model.layer_sizes();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sizes[i]);
  }
  out += "],\n  \"layers\": [";
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    out += l ? ",\n    " : "\n    ";
    out += "{\"weight\": ";
    append_array(out, model.weights(l));
    out += ", \"bias\": ";
    append_array(out, model.bias(l));
    out += '}';
  }
  out += "\n  ]\n}\n";
  return out;
}

MlpClassifier model_from_json(const Json& j) {
  try {
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& layers = j.at("layers");
    if (sizes.size() < 2 || layers.size() != sizes.size() - 1) {
      throw Error(ErrorKind::kParse, "checkpoint layer count does not match layer_sizes");
    }
    std::vector<double> params;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != sizes[l] * sizes[l + 1] || b.size() != sizes[l + 1]) {
        throw Error(ErrorKind::kParse, "checkpoint layer " + std::to_string(l) + " has the wrong shape");
      }
      params.insert(params.end(), w.begin(), w.end());
      params.insert(params.end(), b.begin(), b.end());
    }
    return MlpClassifier::from_parameters(sizes, std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed model checkpoint: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace cwerm

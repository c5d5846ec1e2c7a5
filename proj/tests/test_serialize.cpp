#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "cwerm/config.hpp"
#include "cwerm/serialize.hpp"

using namespace cwerm;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a cwerm::Error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("model checkpoint round trip is exact") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = MlpClassifier::zeros({1 + rng.uniform_index(5), 1 + rng.uniform_index(6), 2 + rng.uniform_index(3)});
    for (auto& p : model.parameters()) p = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
    const std::string text = model_to_json_text(model);
    CHECK(model_from_json(Json::parse(text)) == model);
  }
}

TEST_CASE("checkpoint layout and 17-digit reals") {
  const auto model = MlpClassifier::from_parameters({1, 2}, {0.1, -0.2, 1.0 / 3.0, 0.0});
  const Json j = Json::parse(model_to_json_text(model));
  CHECK(j.at("layer_sizes") == Json::array({1, 2}));
  CHECK(j.at("layers").size() == 1);
  CHECK(j.at("layers")[0].at("weight").size() == 2);
  CHECK(j.at("layers")[0].at("bias").size() == 2);
  const std::string text = model_to_json_text(model);
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("malformed checkpoints are parse errors") {
  CHECK(kind_of([] { model_from_json(Json::parse(R"({"layer_sizes":[1,2],"layers":[]})")); }) == ErrorKind::kParse);
  CHECK(kind_of([] {
          model_from_json(Json::parse(R"({"layer_sizes":[1,2],"layers":[{"weight":[1],"bias":[0,0]}]})"));
        }) == ErrorKind::kParse);
  CHECK(kind_of([] { model_from_json(Json::parse(R"({"layers":[]})")); }) == ErrorKind::kParse);
}

TEST_CASE("coreset weights document") {
  CoresetWeights cw;
  cw.indices = {1, 4, 9};
  cw.weights = {0.5, 1.25, 1.25};
  cw.config.iterations = 7;
  cw.config.unit = IterationUnit::kEpoch;
  const Json j = to_json(cw);
  CHECK(j.at("indices") == Json::array({1, 4, 9}));
  CHECK(j.at("normalization") == "mean1");
  CHECK(j.at("config").at("iterations") == 7);
  const auto back = coreset_weights_from_json(Json::parse(j.dump()));
  CHECK(back.indices == cw.indices);
  CHECK(back.weights == cw.weights);
  CHECK(back.config.unit == IterationUnit::kEpoch);

  CHECK(kind_of([] { coreset_weights_from_json(Json::parse(R"({"indices":[1]})")); }) == ErrorKind::kParse);
}

TEST_CASE("meta config parsing is strict") {
  CHECK(kind_of([] { meta_config_from_json(Json::parse(R"({"inner_lr":0.1,"bogus":1})")); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { meta_config_from_json(Json::parse(R"({"inner_lr":-1})")); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { meta_config_from_json(Json::parse(R"({"iteration_unit":"hour"})")); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { meta_config_from_json(Json::parse(R"({"meta_lr":"fast"})")); }) == ErrorKind::kConfig);
  const auto cfg = meta_config_from_json(Json::parse(R"({"meta_lr":0.01,"init":"zero"})"));
  CHECK(cfg.meta_lr == 0.01);
  CHECK(cfg.init == WeightNetInit::kZero);
  CHECK(cfg.inner_lr == 0.1);
}

TEST_CASE("run config: unknown keys and bad values are config errors") {
  for (const char* doc : {R"({"extra":{}})", R"({"data":{"classes":4,"colour":"red"}})",
                          R"({"featurizer":{"kind":"fourier"}})", R"({"coreset":{"ratio":0}})",
                          R"({"coreset":{"strategy":"herding"}})", R"({"train":{"epochs":0}})",
                          R"({"train":{"optimizer":"adam"}})", R"({"harness":{"arms":["ERM","SVM"]}})",
                          R"({"harness":{"seeds":[]}})", R"({"data":{"source":"imagenet"}})",
                          R"({"featurizer":{"kind":"pca"}})", R"([1,2])"}) {
    CAPTURE(doc);
    CHECK(kind_of([&] { run_config_from_json(Json::parse(doc)); }) == ErrorKind::kConfig);
  }
}

TEST_CASE("run config round trip through JSON") {
  const Json j = Json::parse(R"({
    "data": {"source": "moons", "n": 100, "seed": 3, "label_noise": 0.2},
    "featurizer": {"kind": "pca", "output_dim": 2},
    "coreset": {"ratio": 0.1, "strategy": "random"},
    "meta": {"iterations": 5, "iteration_unit": "epoch"},
    "train": {"hidden": [8, 4], "epochs": 3},
    "harness": {"seeds": [1, 2], "arms": ["ERM", "CW-ERM"], "ratios": [0.5]}
  })");
  const RunConfig cfg = run_config_from_json(j);
  CHECK(cfg.data.source == "moons");
  CHECK(cfg.featurizer.kind == FeaturizerKind::kPca);
  CHECK(cfg.coreset.strategy == CoresetStrategy::kRandom);
  CHECK(cfg.meta.unit == IterationUnit::kEpoch);
  CHECK(cfg.train.hidden == std::vector<std::size_t>{8, 4});
  CHECK(cfg.harness.arms == std::vector<MethodArm>{MethodArm::kErm, MethodArm::kCwErm});
  const Json echoed = to_json(cfg);
  CHECK(to_json(run_config_from_json(echoed)) == echoed);
}

TEST_CASE("config files: missing and malformed files are config errors") {
  testing::TempDir dir("cfg");
  CHECK(kind_of([&] { load_run_config(dir.file("nope.json")); }) == ErrorKind::kConfig);
  testing::write_file(dir.file("bad.json"), "{\"data\": ");
  CHECK(kind_of([&] { load_run_config(dir.file("bad.json")); }) == ErrorKind::kConfig);
}

TEST_CASE("method names") {
  for (const MethodArm arm : kAllArms) CHECK(method_arm_from_string(to_string(arm)) == arm);
  CHECK_THROWS_AS(method_arm_from_string("erm"), Error);
}

TEST_CASE("shipped example configs parse") {
  for (const char* name : {"noisy_blobs.json", "quick.json"}) {
    CAPTURE(name);
    const RunConfig cfg = load_run_config(std::filesystem::path(CWERM_CONFIG_DIR) / name);
    CHECK_FALSE(cfg.harness.seeds.empty());
  }
  const RunConfig bench = load_run_config(std::filesystem::path(CWERM_CONFIG_DIR) / "noisy_blobs.json");
  CHECK(bench.data.classes * bench.data.n_per_class == 4000);
  CHECK(bench.data.label_noise == 0.3);
  CHECK(bench.coreset.ratio == 0.05);
}

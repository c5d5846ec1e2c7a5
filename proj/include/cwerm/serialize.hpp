#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "cwerm/broadcast.hpp"
#include "cwerm/coreset.hpp"
#include "cwerm/model.hpp"
#include "cwerm/reweight.hpp"

namespace cwerm {

using Json = nlohmann::ordered_json;

Json to_json(const CoresetSelection& selection);
CoresetSelection selection_from_json(const Json& j);

Json to_json(const MetaConfig& cfg);
/// Strict: unknown keys are config errors; missing keys keep `defaults`.
MetaConfig meta_config_from_json(const Json& j, const MetaConfig& defaults = {});

Json to_json(const CoresetWeights& weights);
CoresetWeights coreset_weights_from_json(const Json& j);

/// Checkpoint document: layer sizes plus per-layer row-major weight and bias
/// arrays, reals printed with 17 significant digits.
std::string model_to_json_text(const MlpClassifier& model);
MlpClassifier model_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cwerm

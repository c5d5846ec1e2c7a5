#include "cwerm/broadcast.hpp"

#include <charconv>
#include <fstream>

#include "cwerm/geometry.hpp"

namespace cwerm {

BroadcastWeights broadcast_weights(const Matrix& features, const CoresetSelection& selection,
                                   const CoresetWeights& coreset_weights, std::string space) {
  if (selection.indices.empty()) throw Error(ErrorKind::kEmptyInput, "broadcast from an empty coreset");
  if (coreset_weights.weights.size() != selection.indices.size() ||
      (!coreset_weights.indices.empty() && coreset_weights.indices != selection.indices)) {
    throw dimension_mismatch("coreset weights are not aligned with the selection");
  }
  check_selection(selection, features.rows());

  const Matrix refs = features.select_rows(selection.indices);
  const auto nearest = nearest_in_set(features, refs);
  BroadcastWeights out;
  out.space = std::move(space);
  out.w_star.resize(features.rows());
  out.source_index.resize(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out.w_star[i] = coreset_weights.weights[nearest[i]];
    out.source_index[i] = selection.indices[nearest[i]];
  }
  return out;
}

void write_weights_csv(const BroadcastWeights& weights, std::span<const SampleId> ids,
                       const std::filesystem::path& path) {
  if (ids.size() != weights.w_star.size()) throw dimension_mismatch("one id per broadcast weight required");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  std::string text = "id,weight,source_coreset_index\n";
  char buf[32];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    text += std::to_string(ids[i]);
    text += ',';
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), weights.w_star[i]);
    text.append(buf, end);
    text += ',';
    text += std::to_string(weights.source_index[i]);
    text += '\n';
  }
  out << text;
}

WeightsTable read_weights_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(ErrorKind::kEmptyInput, "empty weights file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,weight,source_coreset_index") {
    throw Error(ErrorKind::kParse, "line 1: expected header id,weight,source_coreset_index");
  }
  WeightsTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    SampleId id = 0;
    double w = 0.0;
    std::size_t src = 0;
    const char* p = line.data();
    const bool ok = std::from_chars(p, p + c1, id).ec == std::errc() &&
                    std::from_chars(p + c1 + 1, p + c2, w).ec == std::errc() &&
                    std::from_chars(p + c2 + 1, p + line.size(), src).ec == std::errc();
    if (!ok) throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": malformed record");
    table.ids.push_back(id);
    table.weights.push_back(w);
    table.source_index.push_back(src);
  }
  return table;
}

}  // namespace cwerm

#include "cwerm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cwerm/random.hpp"

namespace cwerm {

void LabeledDataset::validate(bool require_every_class) const {
  const std::size_t n = labels.size();
  if (features.rows() != n || ids.size() != n) {
    throw dimension_mismatch("dataset rows, labels and ids disagree in length");
  }
  if (class_count < 1) throw invalid_argument("dataset class_count must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (const int y : labels) {
    if (y < 0 || y >= class_count) {
      throw invalid_argument("label " + std::to_string(y) + " outside [0, " +
                             std::to_string(class_count) + ")");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  if (require_every_class) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) throw invalid_argument("class " + std::to_string(c) + " has no samples");
    }
  }
  std::unordered_set<SampleId> seen;
  seen.reserve(n);
  for (const SampleId id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::kDuplicateId, "duplicate sample id " + std::to_string(id));
    }
  }
  for (const double v : features.values()) {
    if (!std::isfinite(v)) throw invalid_argument("dataset contains a non-finite feature");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  out.ids.reserve(indices.size());
  for (const std::size_t i : indices) {
    out.labels.push_back(labels[i]);
    out.ids.push_back(ids[i]);
  }
  out.class_count = class_count;
  out.label_names = label_names;
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (const int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

std::vector<std::vector<std::size_t>> LabeledDataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return groups;
}

// Generators -----------------------------------------------------------------

LabeledDataset make_blobs(int k, std::size_t n_per_class, std::size_t d, double separation,
                          double spread, std::uint64_t seed) {
  if (k < 2) throw invalid_argument("make_blobs requires k >= 2");
  if (n_per_class < 1) throw invalid_argument("make_blobs requires n_per_class >= 1");
  if (d < 1) throw invalid_argument("make_blobs requires d >= 1");
  if (!(separation > 0.0) || !(spread > 0.0)) {
    throw invalid_argument("make_blobs requires positive separation and spread");
  }

  Rng rng(derive_seed(seed, "blobs"));
  const auto classes = static_cast<std::size_t>(k);

  // Rejection-sample centers in a cube; widen the cube if it is too crowded.
  std::vector<std::vector<double>> centers;
  double half_width = separation * static_cast<double>(k) / 2.0;
  std::size_t attempts = 0;
  while (centers.size() < classes) {
    std::vector<double> candidate(d);
    for (auto& v : candidate) v = rng.uniform(-half_width, half_width);
    bool ok = true;
    for (const auto& c : centers) {
      if (squared_distance(c, candidate) < separation * separation) {
        ok = false;
        break;
      }
    }
    if (ok) {
      centers.push_back(std::move(candidate));
      attempts = 0;
    } else if (++attempts == 1000) {
      half_width *= 1.5;
      attempts = 0;
    }
  }

  LabeledDataset ds;
  ds.class_count = k;
  ds.features = Matrix(classes * n_per_class, d);
  ds.labels.reserve(classes * n_per_class);
  ds.ids.reserve(classes * n_per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      auto x = ds.features.row(row);
      for (std::size_t j = 0; j < d; ++j) x[j] = rng.normal(centers[c][j], spread);
      ds.labels.push_back(static_cast<int>(c));
      ds.ids.push_back(static_cast<SampleId>(row));
    }
  }
  return ds;
}

LabeledDataset make_two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw invalid_argument("make_two_moons requires an even n >= 2");
  if (!(noise_std >= 0.0)) throw invalid_argument("make_two_moons requires noise_std >= 0");

  Rng rng(derive_seed(seed, "moons"));
  const std::size_t half = n / 2;
  LabeledDataset ds;
  ds.class_count = 2;
  ds.features = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i % half;
    const bool inner = i >= half;
    const double t =
        half > 1 ? std::numbers::pi * static_cast<double>(j) / static_cast<double>(half - 1) : 0.0;
    double x = inner ? 1.0 - std::cos(t) : std::cos(t);
    double y = inner ? 0.5 - std::sin(t) : std::sin(t);
    if (noise_std > 0.0) {
      x += rng.normal(0.0, noise_std);
      y += rng.normal(0.0, noise_std);
    }
    ds.features(i, 0) = x;
    ds.features(i, 1) = y;
    ds.labels.push_back(inner ? 1 : 0);
    ds.ids.push_back(static_cast<SampleId>(i));
  }
  return ds;
}

// CSV ------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Error parse_error(std::size_t line, const std::string& what) {
  return Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorKind::kEmptyInput, "empty CSV file " + path.string());

  const auto header = split_fields(trim(line));
  if (header.size() < 3 || trim(header[0]) != "id" || trim(header[1]) != "label") {
    throw parse_error(line_no, "header must be id,label,f0,...");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (trim(header[j + 2]) != "f" + std::to_string(j)) {
      throw parse_error(line_no, "expected column f" + std::to_string(j));
    }
  }

  std::vector<double> values;
  LabeledDataset ds;
  std::unordered_map<std::string, int> label_map;
  std::unordered_set<SampleId> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (fields.size() != d + 2) {
      throw parse_error(line_no, "expected " + std::to_string(d + 2) + " fields, got " +
                                     std::to_string(fields.size()));
    }
    const auto id_text = trim(fields[0]);
    SampleId id = 0;
    const auto [id_end, id_ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (id_ec != std::errc() || id_end != id_text.data() + id_text.size()) {
      throw parse_error(line_no, "invalid id '" + std::string(id_text) + "'");
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate id " + std::to_string(id));
    }
    const std::string label(trim(fields[1]));
    if (label.empty()) throw parse_error(line_no, "empty label");
    auto it = label_map.find(label);
    if (it == label_map.end()) {
      it = label_map.emplace(label, static_cast<int>(ds.label_names.size())).first;
      ds.label_names.push_back(label);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto f = trim(fields[j + 2]);
      double v = 0.0;
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || end != f.data() + f.size() || !std::isfinite(v)) {
        throw parse_error(line_no, "non-numeric feature f" + std::to_string(j) + " '" +
                                       std::string(f) + "'");
      }
      values.push_back(v);
    }
    ds.ids.push_back(id);
    ds.labels.push_back(it->second);
  }
  if (ds.labels.empty()) throw Error(ErrorKind::kEmptyInput, "CSV file has no records: " + path.string());

  ds.features = Matrix(ds.labels.size(), d, std::move(values));
  ds.class_count = static_cast<int>(ds.label_names.size());
  ds.validate();
  return ds;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

}  // namespace

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  std::string text = "id,label";
  for (std::size_t j = 0; j < ds.dim(); ++j) text += ",f" + std::to_string(j);
  text += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    text += std::to_string(ds.ids[i]);
    text += ',';
    const auto y = static_cast<std::size_t>(ds.labels[i]);
    text += y < ds.label_names.size() ? ds.label_names[y] : std::to_string(y);
    for (const double v : ds.features.row(i)) {
      text += ',';
      append_double(text, v);
    }
    text += '\n';
  }
  out << text;
}

// Noise and splitting -------------------------------------------------------

NoisyDataset inject_label_noise(const LabeledDataset& ds, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) throw invalid_argument("noise rate must be in [0, 1]");
  if (ds.class_count < 2) throw invalid_argument("label noise requires at least two classes");

  NoisyDataset out{ds, std::vector<bool>(ds.size(), false)};
  const auto flips = static_cast<std::size_t>(std::nearbyint(spec.rate * static_cast<double>(ds.size())));
  Rng rng(derive_seed(spec.seed, "label-noise"));
  const auto chosen = rng.sample_without_replacement(ds.size(), flips);
  const auto others = static_cast<std::uint64_t>(ds.class_count - 1);
  for (const std::size_t i : chosen) {
    const int original = ds.labels[i];
    auto replacement = static_cast<int>(rng.uniform_index(others));
    if (replacement >= original) ++replacement;
    out.dataset.labels[i] = replacement;
    out.flip_mask[i] = true;
  }
  return out;
}

namespace {

// Cumulative rounding keeps part sizes within one of fraction * count.
std::vector<std::size_t> part_boundaries(std::size_t count, std::span<const double> fractions) {
  std::vector<std::size_t> bounds;
  double cumulative = 0.0;
  for (std::size_t p = 0; p + 1 < fractions.size(); ++p) {
    cumulative += fractions[p];
    auto b = static_cast<std::size_t>(std::nearbyint(cumulative * static_cast<double>(count)));
    b = std::min(b, count);
    if (!bounds.empty()) b = std::max(b, bounds.back());
    bounds.push_back(b);
  }
  bounds.push_back(count);
  return bounds;
}

}  // namespace

std::vector<std::vector<std::size_t>> split_indices(const LabeledDataset& ds,
                                                    std::span<const double> fractions,
                                                    std::uint64_t seed, bool stratified) {
  if (fractions.empty()) throw invalid_argument("invalid fractions: empty list");
  double total = 0.0;
  for (const double f : fractions) {
    if (!(f > 0.0)) throw invalid_argument("invalid fractions: each fraction must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw invalid_argument("invalid fractions: must sum to 1");

  Rng rng(derive_seed(seed, "split"));
  std::vector<std::vector<std::size_t>> parts(fractions.size());

  auto distribute = [&](std::vector<std::size_t> pool) {
    rng.shuffle(std::span<std::size_t>(pool));
    const auto bounds = part_boundaries(pool.size(), fractions);
    std::size_t begin = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      parts[p].insert(parts[p].end(), pool.begin() + static_cast<std::ptrdiff_t>(begin),
                      pool.begin() + static_cast<std::ptrdiff_t>(bounds[p]));
      begin = bounds[p];
    }
  };

  if (stratified) {
    auto groups = ds.indices_by_class();
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (groups[c].size() < fractions.size()) {
        throw invalid_argument("stratification infeasible: class " + std::to_string(c) + " has " +
                               std::to_string(groups[c].size()) + " samples for " +
                               std::to_string(fractions.size()) + " parts");
      }
    }
    for (auto& g : groups) distribute(std::move(g));
  } else {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    distribute(std::move(all));
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

std::vector<LabeledDataset> split(const LabeledDataset& ds, std::span<const double> fractions,
                                  std::uint64_t seed, bool stratified) {
  const auto parts = split_indices(ds, fractions, seed, stratified);
  std::vector<LabeledDataset> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(ds.subset(p));
  return out;
}

}  // namespace cwerm

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cwerm/pipeline.hpp"

namespace cwerm {

namespace {

// Wall-clock values are reported with millisecond resolution.
double ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const Summary& s, bool timing = false) {
  Json j;
  j["count"] = s.count;
  j["mean"] = s.mean ? Json(timing ? ms(*s.mean) : *s.mean) : Json(nullptr);
  j["std"] = s.stddev ? Json(timing ? ms(*s.stddev) : *s.stddev) : Json(nullptr);
  return j;
}

Json failures_json(const std::vector<CellFailure>& failures) {
  Json j = Json::array();
  for (const auto& f : failures) j.push_back({{"seed", f.seed}, {"error", f.message}});
  return j;
}

Json accuracies_json(const std::vector<std::optional<double>>& values) {
  Json j = Json::array();
  for (const auto& v : values) j.push_back(optional_json(v));
  return j;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string pct(const Summary& s) {
  if (!s.mean) return "failed";
  std::string out = fmt("%.2f", 100.0 * *s.mean);
  out += s.stddev ? " ± " + fmt("%.2f", 100.0 * *s.stddev) : " ± n/a";
  return out;
}

std::string secs(const Summary& s) {
  if (!s.mean) return "-";
  std::string out = fmt("%.3f", *s.mean);
  out += s.stddev ? " ± " + fmt("%.3f", *s.stddev) : "";
  return out;
}

/// Left-aligned columns padded to the widest cell (UTF-8 aware for "±").
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (const unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    widths.resize(std::max(widths.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], width(r[c]));
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out += rows[i][c];
      if (c + 1 < rows[i].size()) out += std::string(widths[c] - width(rows[i][c]) + 2, ' ');
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (const auto w : widths) total += w + 2;
      out += std::string(total > 2 ? total - 2 : total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace

Json to_json(const StageTimes& t) {
  return {{"featurize", ms(t.featurize)}, {"select", ms(t.select)}, {"reweight", ms(t.reweight)},
          {"broadcast", ms(t.broadcast)}, {"train", ms(t.train)}};
}

Json to_json(const RunReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["kind"] = "run";
  j["method"] = to_string(r.method);
  j["seed"] = r.seed;
  j["test_accuracy"] = r.test_accuracy;
  j["stage_times"] = to_json(r.stage_times);
  j["total_seconds"] = ms(r.total_seconds);
  j["sizes"] = {{"pool", r.pool_size}, {"meta", r.meta_size}, {"test", r.test_size}, {"train_rows", r.train_rows}};
  Json c;
  c["size"] = r.coreset.size;
  c["flipped"] = r.coreset.flipped;
  c["mean_weight_flipped"] = optional_json(r.coreset.mean_weight_flipped);
  c["mean_weight_clean"] = optional_json(r.coreset.mean_weight_clean);
  j["coreset"] = c;
  j["train_history"] = {{"mean_loss", r.artifacts.history.mean_loss}, {"accuracy", r.artifacts.history.accuracy}};
  Json audit;
  for (const auto& [stage, ids] : r.audit.touched) audit[stage] = ids.size();
  j["audit"] = {{"ids_touched", audit}, {"test_isolated", r.audit.test_isolated()}};
  j["metadata"] = r.metadata;
  j["config"] = r.config;
  return j;
}

Json to_json(const SweepReport& report) {
  Json j;
  j["schema"] = kReportSchema;
  j["kind"] = "sweep";
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["label"] = row.label;
    r["ratio"] = optional_json(row.ratio);
    r["method"] = to_string(row.method);
    r["seeds"] = row.seeds;
    r["accuracies"] = accuracies_json(row.accuracies);
    r["accuracy"] = to_json(row.accuracy);
    r["reweight_seconds"] = to_json(row.reweight_seconds, true);
    r["total_seconds"] = to_json(row.total_seconds, true);
    r["failures"] = failures_json(row.failures);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["config"] = report.config;
  return j;
}

Json to_json(const CompareReport& report) {
  Json j;
  j["schema"] = kReportSchema;
  j["kind"] = "compare";
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["method"] = to_string(row.method);
    r["seeds"] = row.seeds;
    r["accuracies"] = accuracies_json(row.accuracies);
    r["accuracy"] = to_json(row.accuracy);
    Json stages;
    for (const auto& [name, s] : row.stage_seconds) stages[name] = to_json(s, true);
    r["stage_seconds"] = std::move(stages);
    r["total_seconds"] = to_json(row.total_seconds, true);
    r["failures"] = failures_json(row.failures);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  Json runs = Json::array();
  for (const auto& run : report.runs) {
    runs.push_back({{"method", to_string(run.method)},
                    {"seed", run.seed},
                    {"test_accuracy", run.test_accuracy},
                    {"stage_times", to_json(run.stage_times)},
                    {"total_seconds", ms(run.total_seconds)},
                    {"coreset",
                     {{"size", run.coreset.size},
                      {"flipped", run.coreset.flipped},
                      {"mean_weight_flipped", optional_json(run.coreset.mean_weight_flipped)},
                      {"mean_weight_clean", optional_json(run.coreset.mean_weight_clean)}}}});
  }
  j["runs"] = std::move(runs);
  j["config"] = report.config;
  return j;
}

std::string run_table_text(const RunReport& r) {
  std::vector<std::vector<std::string>> rows = {
      {"method", "seed", "acc(%)", "featurize", "select", "reweight", "broadcast", "train", "total(s)"}};
  rows.push_back({to_string(r.method), std::to_string(r.seed), fmt("%.2f", 100.0 * r.test_accuracy),
                  fmt("%.3f", r.stage_times.featurize), fmt("%.3f", r.stage_times.select),
                  fmt("%.3f", r.stage_times.reweight), fmt("%.3f", r.stage_times.broadcast),
                  fmt("%.3f", r.stage_times.train), fmt("%.3f", r.total_seconds)});
  return render_table(rows);
}

std::string sweep_table_text(const SweepReport& report) {
  std::vector<std::vector<std::string>> rows = {{"row", "method", "acc(%)", "reweight(s)", "total(s)", "failures"}};
  for (const auto& row : report.rows) {
    rows.push_back({row.label, to_string(row.method), pct(row.accuracy), secs(row.reweight_seconds),
                    secs(row.total_seconds), std::to_string(row.failures.size())});
  }
  return render_table(rows);
}

std::string sweep_csv_text(const SweepReport& report) {
  std::ostringstream out;
  out << "label,ratio,method,seed,accuracy\n";
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.seeds.size(); ++i) {
      out << row.label << ',' << (row.ratio ? Json(*row.ratio).dump() : "") << ',' << to_string(row.method)
          << ',' << row.seeds[i] << ',' << (row.accuracies[i] ? Json(*row.accuracies[i]).dump() : "failed")
          << '\n';
    }
  }
  return out.str();
}

std::string compare_table_text(const CompareReport& report) {
  std::vector<std::vector<std::string>> rows = {
      {"method", "acc(%)", "select(s)", "reweight(s)", "broadcast(s)", "train(s)", "total(s)", "failures"}};
  auto stage = [](const CompareRow& row, const char* name) {
    const auto it = row.stage_seconds.find(name);
    return it == row.stage_seconds.end() ? std::string("-") : secs(it->second);
  };
  for (const auto& row : report.rows) {
    rows.push_back({to_string(row.method), pct(row.accuracy), stage(row, "select"), stage(row, "reweight"),
                    stage(row, "broadcast"), stage(row, "train"), secs(row.total_seconds),
                    std::to_string(row.failures.size())});
  }
  return render_table(rows);
}

}  // namespace cwerm

#include "adbench/harness/results.hpp"

#include "adbench/harness/registry.hpp"
#include "adbench/util.hpp"

#include <nlohmann/json.hpp>

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace adbench::harness {

using nlohmann::json;

RunStatus parse_run_status(std::string_view s) {
  if (s == "ok") return RunStatus::ok;
  if (s == "timeout") return RunStatus::timeout;
  if (s == "error") return RunStatus::error;
  throw ValidationError("unknown run status: " + std::string(s));
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::timeout: return "timeout";
    case RunStatus::error: return "error";
  }
  return "?";
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_object(const RunRecord& r) {
  return json{{"run_id", r.run_id},
              {"config_digest", r.config_digest},
              {"dataset", r.dataset},
              {"classifier", r.classifier},
              {"case_id", r.case_id},
              {"interval_s", r.interval_s},
              {"seed", r.seed},
              {"data_size_mode", r.data_size_mode},
              {"fraction", r.fraction},
              {"status", to_string(r.status)},
              {"macro_f1", optional_number(r.macro_f1)},
              {"f1_pos", optional_number(r.f1_pos)},
              {"f1_neg", optional_number(r.f1_neg)},
              {"ib_ratio", r.ib_ratio},
              {"n_train", r.n_train},
              {"n_test", r.n_test},
              {"train_time_s", r.train_time_s},
              {"infer_time_s", r.infer_time_s},
              {"error", r.error}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string canonical_json(const RunRecord& r) { return to_object(r).dump(); }
std::string record_digest(const RunRecord& r) { return hex64(fnv1a(canonical_json(r))); }

std::string to_json_line(const RunRecord& r) {
  json j = to_object(r);
  j["digest"] = record_digest(r);
  return j.dump();
}

RunRecord parse_json_line(std::string_view line, std::size_t line_no, std::string_view source) {
  const std::string where = source.empty() ? std::string("results: ") : std::string(source) + ": ";
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(where + "malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError(where + "record is not an object", line_no);

  std::set<std::string> seen;
  auto field = [&](const char* key) -> const json& {
    seen.insert(key);
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string(where + "missing field '") + key + "'", line_no);
    return *it;
  };
  auto str = [&](const char* key) {
    const auto& v = field(key);
    if (!v.is_string()) throw ParseError(std::string(where + "field '") + key + "' must be a string", line_no);
    return v.get<std::string>();
  };
  auto num = [&](const char* key) {
    const auto& v = field(key);
    if (!v.is_number()) throw ParseError(std::string(where + "field '") + key + "' must be a number", line_no);
    return v.get<double>();
  };
  auto uint = [&](const char* key) {
    const auto& v = field(key);
    if (!v.is_number_unsigned()) throw ParseError(std::string(where + "field '") + key + "' must be a non-negative integer", line_no);
    return v.get<std::uint64_t>();
  };
  auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = field(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw ParseError(std::string(where + "field '") + key + "' must be a number or null", line_no);
    return v.get<double>();
  };

  RunRecord r;
  r.run_id = str("run_id");
  r.config_digest = str("config_digest");
  r.dataset = str("dataset");
  r.classifier = str("classifier");
  r.case_id = str("case_id");
  {
    const auto& v = field("interval_s");
    if (!v.is_number_integer()) throw ParseError(where + "field 'interval_s' must be an integer", line_no);
    r.interval_s = v.get<std::int64_t>();
  }
  r.seed = uint("seed");
  r.data_size_mode = str("data_size_mode");
  r.fraction = num("fraction");
  try {
    r.status = parse_run_status(str("status"));
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(std::string(where + "") + e.what(), line_no);
  }
  r.macro_f1 = opt("macro_f1");
  r.f1_pos = opt("f1_pos");
  r.f1_neg = opt("f1_neg");
  r.ib_ratio = num("ib_ratio");
  r.n_train = std::size_t(uint("n_train"));
  r.n_test = std::size_t(uint("n_test"));
  r.train_time_s = num("train_time_s");
  r.infer_time_s = num("infer_time_s");
  r.error = str("error");
  const std::string digest = str("digest");
  for (const auto& [k, v] : j.items())
    if (!seen.count(k)) throw ParseError(where + "unknown field '" + k + "'", line_no);
  if ((r.status == RunStatus::ok) != (r.macro_f1 && r.f1_pos && r.f1_neg))
    throw ParseError(where + "metrics must be present exactly when status is ok", line_no);
  if (digest != record_digest(r)) throw ParseError(where + "digest mismatch", line_no);
  return r;
}

void write_results(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open results file for append: " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

std::vector<RunRecord> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open results file: " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_json_line(line, n, path.string()));
  }
  return out;
}

}  // namespace

std::vector<RunRecord> read_results(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  const std::string p = path.string();
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  } else if (p.find_first_of("*?[") != std::string::npos) {
    glob_t g{};
    if (::glob(p.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
  } else {
    files.push_back(path);
  }
  if (files.empty()) throw ValidationError("no results files match " + p);
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) {
    auto part = read_file(f);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

// --- summaries --------------------------------------------------------------------

std::vector<Summary> summarize(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::string, std::int64_t, std::string, double>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[{r.dataset, r.case_id, r.classifier, r.interval_s, r.data_size_mode, r.fraction}].push_back(&r);
  std::vector<Summary> out;
  for (const auto& [key, rs] : groups) {
    Summary s;
    std::tie(s.dataset, s.case_id, s.classifier, s.interval_s, s.data_size_mode, s.fraction) = key;
    std::vector<double> f1;
    for (const auto* r : rs) {
      if (r->status == RunStatus::ok) f1.push_back(*r->macro_f1);
      else if (r->status == RunStatus::timeout) ++s.n_timeout;
      else ++s.n_error;
    }
    s.n_ok = f1.size();
    if (!f1.empty()) {
      const double mean = std::accumulate(f1.begin(), f1.end(), 0.0) / double(f1.size());
      double ss = 0;
      for (double v : f1) ss += (v - mean) * (v - mean);
      s.mean = mean;
      s.std = f1.size() > 1 ? std::sqrt(ss / double(f1.size() - 1)) : 0.0;
      s.min = *std::min_element(f1.begin(), f1.end());
      s.max = *std::max_element(f1.begin(), f1.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> mid_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (double(i + 1) + double(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw ValidationError("unknown report format: " + std::string(s) + " (csv|markdown)");
}

namespace {

struct Row {
  std::string appliance, dataset;
  std::map<std::string, double> cells;  // classifier -> mean
  bool average = false;                 // appliance average row
};

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// Bold for the best value, underline for the second best (markdown only).
std::vector<std::string> decorate(const std::vector<std::optional<double>>& values, bool lower_is_better, bool md,
                                  const std::function<std::string(double)>& fmt) {
  std::vector<double> present;
  for (const auto& v : values)
    if (v) present.push_back(lower_is_better ? -*v : *v);
  std::sort(present.begin(), present.end(), std::greater<>());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  std::vector<std::string> out;
  for (const auto& v : values) {
    if (!v) {
      out.push_back(md ? "/" : "");
      continue;
    }
    std::string s = fmt(*v);
    const double key = lower_is_better ? -*v : *v;
    if (md && !present.empty() && key == present[0]) s = "**" + s + "**";
    else if (md && present.size() > 1 && key == present[1]) s = "<u>" + s + "</u>";
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::string report(const std::vector<RunRecord>& records, ReportFormat format) {
  const auto summaries = summarize(records);
  std::set<std::int64_t> intervals;
  for (const auto& s : summaries)
    if (s.mean) intervals.insert(s.interval_s);
  if (intervals.empty()) throw ValidationError("report: no successful runs");

  // Row label: dataset, qualified by interval and data-size setting when they vary.
  auto dataset_label = [&](const Summary& s) {
    std::string label = s.dataset;
    if (intervals.size() > 1) label += " @" + std::to_string(s.interval_s) + "s";
    if (s.data_size_mode != "none") {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %s p=%g", s.data_size_mode.c_str(), s.fraction);
      label += buf;
    }
    return label;
  };

  std::vector<std::string> classifiers;
  {
    std::set<std::string> present;
    for (const auto& s : summaries)
      if (s.mean) present.insert(s.classifier);
    for (const auto& n : classifier_names())
      if (present.count(n)) classifiers.push_back(n);
    for (const auto& n : present)
      if (!is_known_classifier(n)) classifiers.push_back(n);
  }

  std::map<std::string, std::map<std::string, Row>> by_case;
  for (const auto& s : summaries) {
    if (!s.mean) continue;
    auto& row = by_case[s.case_id][dataset_label(s)];
    row.appliance = s.case_id;
    row.dataset = dataset_label(s);
    row.cells[s.classifier] = *s.mean;
  }

  std::vector<Row> rows;
  for (auto& [case_id, datasets] : by_case) {
    for (auto& [label, row] : datasets) rows.push_back(row);
    if (datasets.size() > 1) {
      Row avg{case_id, "Appliance Average Score", {}, true};
      for (const auto& c : classifiers) {
        std::vector<double> v;
        for (const auto& [label, row] : datasets)
          if (row.cells.count(c)) v.push_back(row.cells.at(c));
        if (auto m = mean_of(v)) avg.cells[c] = *m;
      }
      rows.push_back(std::move(avg));
    }
  }

  // Footer over dataset rows only.
  std::vector<std::optional<double>> avg_score(classifiers.size()), avg_rank(classifiers.size());
  {
    std::vector<std::vector<double>> scores(classifiers.size()), ranks(classifiers.size());
    for (const auto& row : rows) {
      if (row.average) continue;
      std::vector<double> vals;
      std::vector<std::size_t> idx;
      for (std::size_t c = 0; c < classifiers.size(); ++c)
        if (row.cells.count(classifiers[c])) {
          vals.push_back(row.cells.at(classifiers[c]));
          idx.push_back(c);
          scores[c].push_back(vals.back());
        }
      const auto r = mid_ranks(vals);
      for (std::size_t k = 0; k < idx.size(); ++k) ranks[idx[k]].push_back(r[k]);
    }
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
      avg_score[c] = mean_of(scores[c]);
      avg_rank[c] = mean_of(ranks[c]);
    }
  }

  const bool md = format == ReportFormat::markdown;
  std::ostringstream out;
  auto emit = [&](const std::string& a, const std::string& d, const std::vector<std::string>& cells,
                  const std::string& last) {
    if (md) {
      out << "| " << a << " | " << d << " |";
      for (const auto& c : cells) out << ' ' << c << " |";
      out << ' ' << last << " |\n";
    } else {
      out << csv_field(a) << ',' << csv_field(d);
      for (const auto& c : cells) out << ',' << c;
      out << ',' << last << '\n';
    }
  };

  std::vector<std::string> header(classifiers.begin(), classifiers.end());
  emit("Appliance", "Dataset", header, md ? "Avg. Score" : "avg_score");
  if (md) {
    out << "|---|---|";
    for (std::size_t i = 0; i < classifiers.size(); ++i) out << "---|";
    out << "---|\n";
  }
  for (const auto& row : rows) {
    std::vector<std::optional<double>> vals;
    std::vector<double> present;
    for (const auto& c : classifiers) {
      if (row.cells.count(c)) {
        vals.push_back(row.cells.at(c));
        present.push_back(row.cells.at(c));
      } else {
        vals.push_back(std::nullopt);
      }
    }
    const auto label = md && row.average ? "*" + row.dataset + "*" : row.dataset;
    emit(row.appliance, label, decorate(vals, false, md, fmt3), fmt3(*mean_of(present)));
  }
  const std::string na = md ? "/" : "";
  emit(md ? "**Classifiers Average Score**" : "Classifiers Average Score", "", decorate(avg_score, false, md, fmt3), na);
  emit(md ? "**Classifiers Average Rank**" : "Classifiers Average Rank", "", decorate(avg_rank, true, md, fmt3), na);

  if (md) {
    out << "\n### Run variability\n\n"
        << "| Appliance | Dataset | Classifier | ok | timeout | error | mean | std | min | max |\n"
        << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : summaries) {
      out << "| " << s.case_id << " | " << dataset_label(s) << " | " << s.classifier << " | " << s.n_ok << " | "
          << s.n_timeout << " | " << s.n_error << " | ";
      if (s.mean) out << fmt3(*s.mean) << " | " << fmt3(*s.std) << " | " << fmt3(*s.min) << " | " << fmt3(*s.max);
      else out << "/ | / | / | /";
      out << " |\n";
    }
  }
  return out.str();
}

}  // namespace adbench::harness

#include "adbench/preprocess.hpp"

#include "adbench/util.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace adbench::preprocess {

namespace fs = std::filesystem;

SliceMode parse_slice_mode(std::string_view s) {
  if (s == "day") return SliceMode::day;
  if (s == "full-series" || s == "full") return SliceMode::full_series;
  throw ValidationError("unknown slice mode '" + std::string(s) + "'");
}

SplitMode parse_split_mode(std::string_view s) {
  if (s == "by-house") return SplitMode::by_house;
  if (s == "nilm-holdout") return SplitMode::nilm_holdout;
  throw ValidationError("unknown split mode '" + std::string(s) + "'");
}

std::string to_string(SliceMode m) { return m == SliceMode::day ? "day" : "full-series"; }
std::string to_string(SplitMode m) { return m == SplitMode::by_house ? "by-house" : "nilm-holdout"; }

TimeSeries resample(const TimeSeries& series, std::int64_t target_interval_s) {
  const auto interval = series.interval_s();
  if (target_interval_s < interval)
    throw ValidationError("resample: upsampling from " + std::to_string(interval) + " s to " +
                          std::to_string(target_interval_s) + " s is not supported");
  if (target_interval_s % interval != 0)
    throw ValidationError("resample: " + std::to_string(target_interval_s) + " s is not a multiple of " +
                          std::to_string(interval) + " s");
  const auto k = static_cast<std::size_t>(target_interval_s / interval);
  if (k == 1) return series;
  const std::size_t n_out = series.size() / k;
  if (n_out == 0) throw ValidationError("resample: series shorter than one target interval");
  if (series.size() % k != 0)
    log_warning("resample: dropping " + std::to_string(series.size() % k) + " trailing readings of " +
                series.source_id());
  const auto& v = series.values();
  std::vector<Reading> out(n_out);
  for (std::size_t b = 0; b < n_out; ++b) {
    double sum = 0;
    bool complete = true;
    for (std::size_t i = b * k; i < (b + 1) * k; ++i) {
      if (!v[i]) {
        complete = false;
        break;
      }
      sum += *v[i];
    }
    if (complete) out[b] = sum / double(k);
  }
  return TimeSeries(series.start(), target_interval_s, std::move(out), series.source_id());
}

TimeSeries interpolate_gaps(const TimeSeries& series, std::int64_t max_gap_s) {
  std::vector<Reading> v = series.values();
  const std::size_t n = v.size();
  std::size_t j = 0;
  while (j < n) {
    if (v[j]) {
      ++j;
      continue;
    }
    const std::size_t run_start = j;
    while (j < n && !v[j]) ++j;
    // Missing run [run_start, j); needs a present bound on both sides.
    if (run_start == 0 || j == n) continue;
    const auto run = static_cast<std::int64_t>(j - run_start);
    if (run * series.interval_s() > max_gap_s) continue;
    const std::size_t left = run_start - 1, right = j;
    const double a = *v[left], b = *v[right];
    const double span = double(right - left);
    for (std::size_t i = run_start; i < right; ++i) v[i] = a + (b - a) * (double(i - left) / span);
  }
  return TimeSeries(series.start(), series.interval_s(), std::move(v), series.source_id());
}

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t m) { return ((a % m) + m) % m; }

// Complete midnight-aligned days of one series, keyed by day start.
std::map<Timestamp, Vector> complete_days(const TimeSeries& s) {
  const auto interval = s.interval_s();
  if (kSecondsPerDay % interval != 0)
    throw ValidationError("slice_days: interval " + std::to_string(interval) + " s does not divide a day");
  const auto per_day = static_cast<std::size_t>(kSecondsPerDay / interval);
  std::map<Timestamp, Vector> out;
  const std::int64_t offset = floor_mod(s.start(), kSecondsPerDay);
  if (offset % interval != 0) return out;  // grid never touches midnight
  std::size_t first = offset == 0 ? 0 : static_cast<std::size_t>((kSecondsPerDay - offset) / interval);
  const auto& v = s.values();
  for (std::size_t d = first; d + per_day <= v.size(); d += per_day) {
    Vector day(static_cast<Index>(per_day));
    bool ok = true;
    for (std::size_t i = 0; i < per_day && ok; ++i) {
      if (!v[d + i]) ok = false;
      else day[static_cast<Index>(i)] = *v[d + i];
    }
    if (ok) out.emplace(s.timestamp(d), std::move(day));
  }
  return out;
}

}  // namespace

std::vector<DaySlice> slice_days(const dataio::HouseholdRecord& record, std::int64_t interval_s) {
  if (kSecondsPerDay % interval_s != 0)
    throw ValidationError("slice_days: interval " + std::to_string(interval_s) + " s does not divide a day");
  if (record.aggregate.interval_s() != interval_s)
    throw ValidationError("slice_days: record is on a " + std::to_string(record.aggregate.interval_s()) +
                          " s grid, expected " + std::to_string(interval_s) + " s");
  auto agg_days = complete_days(record.aggregate);
  std::map<std::string, std::map<Timestamp, Vector>> channel_days;
  for (const auto& [name, ch] : record.appliance_channels) {
    if (ch.interval_s() != interval_s) throw ValidationError("slice_days: channel grid mismatch for " + name);
    channel_days.emplace(name, complete_days(ch));
  }
  std::vector<DaySlice> out;
  out.reserve(agg_days.size());
  for (auto& [start, values] : agg_days) {
    DaySlice slice{start, std::move(values), {}};
    for (auto& [name, days] : channel_days) {
      auto it = days.find(start);
      if (it != days.end()) slice.appliances.emplace(name, std::move(it->second));
    }
    out.push_back(std::move(slice));
  }
  return out;
}

int assign_label(const Vector& appliance_day, double on_threshold_w, int on_min_samples) {
  int run = 0;
  for (Index i = 0; i < appliance_day.size(); ++i) {
    run = appliance_day[i] > on_threshold_w ? run + 1 : 0;
    if (run >= on_min_samples) return 1;
  }
  return 0;
}

Dataset balance_train(const Dataset& instances, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < instances.size(); ++i) (instances[i].label == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    const std::string case_id = instances.empty() ? std::string("?") : instances.front().case_id;
    throw ValidationError("balance_train: case '" + case_id + "' has no " +
                          (pos.empty() ? "positive" : "negative") + " training instances");
  }
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  if (majority.size() > keep) {
    auto rng = stream_rng(seed, "balance");
    std::shuffle(majority.begin(), majority.end(), rng);
    majority.resize(keep);
  }
  std::vector<std::size_t> idx(pos);
  idx.insert(idx.end(), neg.begin(), neg.end());
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(instances[i]);
  return out;
}

double imbalance_ratio(const Dataset& instances) {
  if (instances.empty()) throw ValidationError("imbalance_ratio: empty set");
  std::size_t pos = 0;
  for (const auto& d : instances) pos += d.label == 1;
  return double(pos) / double(instances.size());
}

HouseCounts by_house_counts(std::size_t n) {
  if (n < 4) throw ValidationError("split: by-house split needs at least 4 houses, got " + std::to_string(n));
  auto round_share = [n](double p) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p * double(n))));
  };
  const std::size_t test = round_share(0.2), val = round_share(0.1);
  return {n - test - val, val, test};
}

ExperimentSplit split(const Dataset& instances, const PreprocessConfig& config) {
  std::vector<std::string> houses;
  {
    std::set<std::string> ids;
    for (const auto& d : instances) ids.insert(d.source_id);
    houses.assign(ids.begin(), ids.end());
  }
  auto rng = stream_rng(config.seed, "split");
  std::shuffle(houses.begin(), houses.end(), rng);

  ExperimentSplit out;
  out.seed = config.seed;
  Dataset pool;
  if (config.split == SplitMode::by_house) {
    const auto counts = by_house_counts(houses.size());
    const std::set<std::string> test(houses.begin(), houses.begin() + long(counts.test));
    const std::set<std::string> val(houses.begin() + long(counts.test),
                                    houses.begin() + long(counts.test + counts.validation));
    for (const auto& d : instances) {
      if (test.count(d.source_id)) out.test.push_back(d);
      else if (val.count(d.source_id)) out.validation.push_back(d);
      else pool.push_back(d);
    }
  } else {
    if (config.holdout_houses < 1 || houses.size() <= std::size_t(config.holdout_houses))
      throw ValidationError("split: nilm-holdout needs more than " + std::to_string(config.holdout_houses) +
                            " houses, got " + std::to_string(houses.size()));
    const std::set<std::string> test(houses.begin(), houses.begin() + config.holdout_houses);
    Dataset rest;
    for (const auto& d : instances) (test.count(d.source_id) ? out.test : rest).push_back(d);
    std::vector<std::size_t> idx(rest.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_val = rest.size() >= 2 ? std::max<std::size_t>(1, rest.size() / 8) : 0;
    std::vector<char> is_val(rest.size(), 0);
    for (std::size_t i = 0; i < n_val; ++i) is_val[idx[i]] = 1;
    for (std::size_t i = 0; i < rest.size(); ++i) (is_val[i] ? out.validation : pool).push_back(rest[i]);
  }
  out.train = balance_train(pool, config.seed);
  return out;
}

Dataset build_instances(const std::vector<dataio::HouseholdRecord>& records, const std::string& case_id,
                        const PreprocessConfig& config) {
  if (config.max_gap_s < config.target_interval_s)
    throw ValidationError("preprocess: max_gap_s must be at least target_interval_s");
  Dataset out;
  for (const auto& rec : records) {
    const auto channel = rec.appliance_channels.find(case_id);
    const auto survey = rec.survey_labels.find(case_id);
    if (channel == rec.appliance_channels.end() && survey == rec.survey_labels.end()) {
      log_warning(rec.source_id + ": no channel or survey label for '" + case_id + "', skipped");
      continue;
    }
    const auto agg = interpolate_gaps(resample(rec.aggregate, config.target_interval_s), config.max_gap_s);

    if (config.slice == SliceMode::full_series) {
      if (agg.has_missing()) {
        log_warning(rec.source_id + ": residual missing values, series dropped");
        continue;
      }
      int label = 0;
      if (channel != rec.appliance_channels.end()) {
        const auto ch = interpolate_gaps(channel->second, config.max_gap_s);
        if (ch.has_missing()) continue;
        label = assign_label(ch.dense(), config.on_threshold_w, config.on_min_samples);
      } else {
        label = survey->second;
      }
      out.push_back(make_instance(agg.dense(), label, case_id, rec.source_id, agg.start(), agg.interval_s()));
      continue;
    }

    // Day slices. Labels are fixed at the record's base grid, before resampling.
    std::map<Timestamp, int> day_labels;
    const bool nilm = channel != rec.appliance_channels.end();
    if (nilm) {
      const auto ch = interpolate_gaps(channel->second, config.max_gap_s);
      for (const auto& [start, values] : complete_days(ch))
        day_labels.emplace(start, assign_label(values, config.on_threshold_w, config.on_min_samples));
    }
    dataio::HouseholdRecord resampled{rec.source_id, agg, {}, {}};
    for (auto& slice : slice_days(resampled, config.target_interval_s)) {
      int label;
      if (nilm) {
        const auto it = day_labels.find(slice.start);
        if (it == day_labels.end()) continue;
        label = it->second;
      } else {
        label = survey->second;
      }
      out.push_back(make_instance(std::move(slice.aggregate), label, case_id, rec.source_id, slice.start,
                                  config.target_interval_s));
    }
  }
  if (out.empty()) throw ValidationError("preprocess: no instances for case '" + case_id + "'");

  if (config.slice == SliceMode::full_series) {
    Index shortest = out.front().values.size();
    for (const auto& d : out) shortest = std::min(shortest, d.values.size());
    for (auto& d : out) {
      if (d.values.size() > shortest) {
        Vector head = d.values.head(shortest);
        d.values = std::move(head);
      }
    }
  }
  return out;
}

void write_preprocessed(const Dataset& instances, const std::map<std::string, std::string>& manifest,
                        const fs::path& dir) {
  if (instances.empty()) throw ValidationError("write_preprocessed: no instances");
  fs::create_directories(dir);
  const Index length = instances.front().values.size();
  const auto interval = instances.front().interval_s;
  std::map<std::string, std::vector<const LabeledInstance*>> by_house;
  for (const auto& d : instances) {
    if (d.values.size() != length || d.interval_s != interval)
      throw ValidationError("write_preprocessed: instances differ in length or interval");
    by_house[d.source_id].push_back(&d);
  }
  std::ofstream labels(dir / "day_labels.csv", std::ios::binary);
  labels << "source_id,start,label\n";
  for (auto& [house, items] : by_house) {
    std::sort(items.begin(), items.end(), [](auto* a, auto* b) { return a->start < b->start; });
    std::vector<Reading> values;
    Timestamp start = items.front()->start;
    for (const auto* d : items) {
      const auto offset = (d->start - start) / interval;
      if (d->start < start + Timestamp(values.size()) * interval)
        throw ValidationError("write_preprocessed: overlapping instances for " + house);
      values.resize(static_cast<std::size_t>(offset));
      for (Index i = 0; i < d->values.size(); ++i) values.emplace_back(d->values[i]);
      labels << house << ',' << dataio::format_iso8601(d->start) << ',' << d->label << '\n';
    }
    // Rows for missing readings between slices are omitted; gaps reappear on read.
    std::ofstream out(dir / (house + ".csv"), std::ios::binary);
    out << "timestamp,aggregate\n";
    std::ostringstream tmp;
    dataio::HouseholdRecord rec{house, TimeSeries(start, interval, values, house), {}, {}};
    dataio::write_household_csv(rec, tmp);
    std::istringstream lines(tmp.str());
    std::string line;
    std::getline(lines, line);  // header already written
    while (std::getline(lines, line))
      if (line.back() != ',') out << line << '\n';
  }
  std::ofstream m(dir / "manifest.txt", std::ios::binary);
  auto full = manifest;
  full["series_length"] = std::to_string(length);
  full["interval_s"] = std::to_string(interval);
  full["n_instances"] = std::to_string(instances.size());
  full["case_id"] = instances.front().case_id;
  for (const auto& [k, v] : full) m << k << " = " << v << '\n';
}

PreprocessedDataset read_preprocessed(const fs::path& dir) {
  PreprocessedDataset out;
  {
    std::ifstream m(dir / "manifest.txt");
    if (!m) throw ValidationError("read_preprocessed: missing manifest.txt in " + dir.string());
    std::string line;
    while (std::getline(m, line)) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      out.manifest[line.substr(0, eq)] = line.substr(eq + 3);
    }
  }
  const auto length = static_cast<std::size_t>(std::stoll(out.manifest.at("series_length")));
  const auto case_id = out.manifest.at("case_id");
  std::map<std::string, TimeSeries> houses;
  std::ifstream labels(dir / "day_labels.csv");
  if (!labels) throw ValidationError("read_preprocessed: missing day_labels.csv");
  std::string line;
  std::getline(labels, line);
  std::size_t line_no = 1;
  while (std::getline(labels, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) throw ParseError("day_labels.csv: malformed row", line_no);
    const auto house = line.substr(0, c1);
    const auto start = dataio::parse_iso8601(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    const auto label_text = line.substr(c2 + 1);
    if (!start || (label_text != "0" && label_text != "1"))
      throw ParseError("day_labels.csv: malformed row", line_no);
    auto it = houses.find(house);
    if (it == houses.end())
      it = houses.emplace(house, dataio::read_household_csv(dir / (house + ".csv")).aggregate).first;
    const auto& s = it->second;
    const auto offset = (*start - s.start()) / s.interval_s();
    if (*start < s.start() || std::size_t(offset) + length > s.size())
      throw ValidationError("read_preprocessed: slice outside house data at line " + std::to_string(line_no));
    Vector v(static_cast<Index>(length));
    for (std::size_t i = 0; i < length; ++i) {
      const auto& r = s.values()[std::size_t(offset) + i];
      if (!r) throw ValidationError("read_preprocessed: missing reading inside slice");
      v[Index(i)] = *r;
    }
    out.instances.push_back(make_instance(std::move(v), label_text == "1", case_id, house, *start, s.interval_s()));
  }
  return out;
}

}  // namespace adbench::preprocess

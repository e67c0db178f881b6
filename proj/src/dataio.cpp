#include "adbench/dataio.hpp"

#include "adbench/util.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace adbench::dataio {

namespace fs = std::filesystem;

SchemaKind parse_schema_kind(std::string_view s) {
  if (s == "nilm") return SchemaKind::nilm;
  if (s == "survey") return SchemaKind::survey;
  throw ValidationError("unknown schema kind '" + std::string(s) + "' (expected nilm or survey)");
}

// --- timestamps -----------------------------------------------------------

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view t) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (t.size() != 20 || t[4] != '-' || t[7] != '-' || t[10] != 'T' || t[13] != ':' || t[16] != ':' ||
      t[19] != 'Z')
    return std::nullopt;
  int y, mo, d, h, mi, s;
  if (!parse_int(t.substr(0, 4), y) || !parse_int(t.substr(5, 2), mo) || !parse_int(t.substr(8, 2), d) ||
      !parse_int(t.substr(11, 2), h) || !parse_int(t.substr(14, 2), mi) || !parse_int(t.substr(17, 2), s))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since_epoch) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day_index = static_cast<std::int64_t>(std::floor(double(t) / double(kSecondsPerDay)));
  const std::int64_t rem = t - day_index * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{day_index}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), int(rem / 3600), int(rem % 3600 / 60), int(rem % 60));
  return buf;
}

// --- CSV ------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct RawRow {
  Timestamp t;
  std::vector<Reading> values;
};

// Places raw rows on a regular grid. Sub-minute sources are averaged per minute
// bucket; coarser sources must already sit on a regular grid.
std::pair<std::int64_t, std::vector<std::vector<Reading>>> regularize(const std::vector<RawRow>& rows,
                                                                      std::size_t n_cols) {
  std::int64_t min_diff = kBaseIntervalS;
  if (rows.size() > 1) {
    min_diff = rows[1].t - rows[0].t;
    for (std::size_t i = 2; i < rows.size(); ++i) min_diff = std::min(min_diff, rows[i].t - rows[i - 1].t);
  }
  std::vector<std::vector<Reading>> cols(n_cols);

  if (min_diff < kBaseIntervalS) {
    auto bucket = [](Timestamp t) {
      return static_cast<Timestamp>(std::floor(double(t) / double(kBaseIntervalS))) * kBaseIntervalS;
    };
    const Timestamp first = bucket(rows.front().t), last = bucket(rows.back().t);
    const auto n = static_cast<std::size_t>((last - first) / kBaseIntervalS + 1);
    std::vector<std::vector<double>> sum(n_cols, std::vector<double>(n, 0.0));
    std::vector<std::vector<int>> count(n_cols, std::vector<int>(n, 0));
    for (const auto& r : rows) {
      const auto b = static_cast<std::size_t>((bucket(r.t) - first) / kBaseIntervalS);
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (r.values[c]) {
          sum[c][b] += *r.values[c];
          ++count[c][b];
        }
      }
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      cols[c].resize(n);
      for (std::size_t b = 0; b < n; ++b)
        if (count[c][b] > 0) cols[c][b] = sum[c][b] / count[c][b];
    }
    return {kBaseIntervalS, std::move(cols)};
  }

  const std::int64_t interval = min_diff;
  const Timestamp first = rows.front().t;
  const auto n = static_cast<std::size_t>((rows.back().t - first) / interval + 1);
  for (auto& c : cols) c.assign(n, std::nullopt);
  for (const auto& r : rows) {
    if ((r.t - first) % interval != 0)
      throw ValidationError("timestamp " + format_iso8601(r.t) + " is off the " +
                            std::to_string(interval) + " s grid");
    const auto j = static_cast<std::size_t>((r.t - first) / interval);
    for (std::size_t c = 0; c < n_cols; ++c) cols[c][j] = r.values[c];
  }
  return {interval, std::move(cols)};
}

Timestamp grid_start(const std::vector<RawRow>& rows, std::int64_t interval) {
  if (interval == kBaseIntervalS && rows.size() > 1 && rows[1].t - rows[0].t < kBaseIntervalS)
    return static_cast<Timestamp>(std::floor(double(rows.front().t) / double(kBaseIntervalS))) *
           kBaseIntervalS;
  return rows.front().t;
}

}  // namespace

HouseholdRecord read_household_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!next_line(in, line)) throw ParseError(name + ": missing header", 1);
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "timestamp" || header[1] != "aggregate")
    throw ParseError(name + ": header must start with 'timestamp,aggregate'", 1);
  std::vector<std::string> columns(header.begin() + 1, header.end());
  {
    std::set<std::string> seen;
    for (const auto& c : columns) {
      if (c.empty()) throw ParseError(name + ": empty column name", 1);
      if (!seen.insert(c).second) throw ParseError(name + ": duplicate column '" + c + "'", 1);
    }
  }

  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(name + ": expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    const auto t = parse_iso8601(fields[0]);
    if (!t) throw ParseError(name + ": malformed timestamp '" + std::string(fields[0]) + "'", line_no);
    if (!rows.empty() && *t <= rows.back().t)
      throw ValidationError(name + ": timestamps not strictly increasing at line " + std::to_string(line_no));
    RawRow row{*t, {}};
    row.values.reserve(columns.size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto f = fields[c];
      if (f.empty()) {
        row.values.emplace_back();
        continue;
      }
      double v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
        throw ParseError(name + ": malformed number '" + std::string(f) + "'", line_no);
      if (v < 0) throw ValidationError(name + ": negative reading at line " + std::to_string(line_no));
      row.values.emplace_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(name + ": no data rows");

  auto [interval, cols] = regularize(rows, columns.size());
  const Timestamp start = grid_start(rows, interval);
  HouseholdRecord rec;
  rec.source_id = name;
  rec.aggregate = TimeSeries(start, interval, std::move(cols[0]), name);
  for (std::size_t c = 1; c < columns.size(); ++c)
    rec.appliance_channels.emplace(columns[c], TimeSeries(start, interval, std::move(cols[c]), name));
  return rec;
}

HouseholdRecord read_household_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_household_csv(in, path.stem().string());
}

void write_household_csv(const HouseholdRecord& record, std::ostream& out) {
  const auto& agg = record.aggregate;
  std::vector<const TimeSeries*> channels;
  out << "timestamp,aggregate";
  for (const auto& [name, series] : record.appliance_channels) {
    if (series.start() != agg.start() || series.interval_s() != agg.interval_s() ||
        series.size() != agg.size())
      throw ValidationError(record.source_id + ": channel '" + name + "' is not aligned with the aggregate");
    out << ',' << name;
    channels.push_back(&series);
  }
  out << '\n';
  auto put = [&](const Reading& r) {
    if (r) out << format_double(*r);
  };
  for (std::size_t j = 0; j < agg.size(); ++j) {
    out << format_iso8601(agg.timestamp(j)) << ',';
    put(agg.values()[j]);
    for (const auto* ch : channels) {
      out << ',';
      put(ch->values()[j]);
    }
    out << '\n';
  }
}

void write_household_csv(const HouseholdRecord& record, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_household_csv(record, out);
}

std::map<std::string, std::map<std::string, int>> read_survey_labels(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw ParseError("survey labels: missing header", 1);
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "source_id")
    throw ParseError("survey labels: header must be 'source_id,<appliance>...'", 1);
  std::map<std::string, std::map<std::string, int>> out;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) throw ParseError("survey labels: wrong field count", line_no);
    auto& labels = out[std::string(fields[0])];
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c] != "0" && fields[c] != "1")
        throw ParseError("survey labels: cells must be 0 or 1", line_no);
      labels[std::string(header[c])] = fields[c] == "1" ? 1 : 0;
    }
  }
  return out;
}

void write_survey_labels(const std::vector<HouseholdRecord>& records, std::ostream& out) {
  std::set<std::string> appliances;
  for (const auto& r : records)
    for (const auto& [name, _] : r.survey_labels) appliances.insert(name);
  out << "source_id";
  for (const auto& a : appliances) out << ',' << a;
  out << '\n';
  for (const auto& r : records) {
    out << r.source_id;
    for (const auto& a : appliances) {
      const auto it = r.survey_labels.find(a);
      if (it == r.survey_labels.end())
        throw ValidationError(r.source_id + ": no survey label for '" + a + "'");
      out << ',' << it->second;
    }
    out << '\n';
  }
}

std::vector<HouseholdRecord> read_csv_dataset(const fs::path& dir, SchemaKind kind) {
  if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".csv" && p.filename() != kSurveySidecar &&
        p.filename() != "day_labels.csv")
      files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no household files in " + dir.string());

  std::map<std::string, std::map<std::string, int>> survey;
  if (kind == SchemaKind::survey) {
    std::ifstream in(dir / kSurveySidecar);
    if (!in) throw ValidationError("survey dataset requires " + (dir / kSurveySidecar).string());
    survey = read_survey_labels(in);
  }

  std::vector<HouseholdRecord> records;
  records.reserve(files.size());
  for (const auto& f : files) {
    auto rec = read_household_csv(f);
    if (kind == SchemaKind::survey) {
      if (!rec.appliance_channels.empty())
        throw ValidationError(f.filename().string() + ": unknown appliance column '" +
                              rec.appliance_channels.begin()->first + "' in survey household file");
      const auto it = survey.find(rec.source_id);
      if (it == survey.end()) throw ValidationError(rec.source_id + ": missing from " + kSurveySidecar);
      rec.survey_labels = it->second;
    } else if (rec.appliance_channels.empty()) {
      throw ValidationError(f.filename().string() + ": NILM household file has no appliance columns");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_csv_dataset(const std::vector<HouseholdRecord>& records, const fs::path& dir) {
  fs::create_directories(dir);
  bool any_survey = false;
  for (const auto& r : records) {
    write_household_csv(r, dir / (r.source_id + ".csv"));
    any_survey = any_survey || !r.survey_labels.empty();
  }
  if (any_survey) {
    std::ofstream out(dir / kSurveySidecar, std::ios::binary);
    write_survey_labels(records, out);
  }
}

// --- synthetic generator --------------------------------------------------

SignatureShape parse_signature_shape(std::string_view s) {
  if (s == "rectangular") return SignatureShape::rectangular;
  if (s == "spike-train" || s == "spike_train") return SignatureShape::spike_train;
  if (s == "cyclic") return SignatureShape::cyclic;
  throw ValidationError("unknown signature shape '" + std::string(s) + "'");
}

std::string to_string(SignatureShape s) {
  switch (s) {
    case SignatureShape::rectangular: return "rectangular";
    case SignatureShape::spike_train: return "spike-train";
    case SignatureShape::cyclic: return "cyclic";
  }
  return "?";
}

namespace {

double pulse_period(const ApplianceModel& m) {
  return m.pulse_period_s > 0 ? m.pulse_period_s : 10.0 * m.duration_s;
}

double activation_span(const ApplianceModel& m) {
  if (m.shape == SignatureShape::spike_train) return (m.pulses - 1) * pulse_period(m) + m.duration_s;
  return m.duration_s;
}

// Adds `power` over [t0, t1) seconds, as the exact mean over each grid bucket.
void add_block(std::vector<double>& channel, double interval, double t0, double t1, double power) {
  if (t1 <= t0) return;
  const auto first = static_cast<std::size_t>(std::floor(t0 / interval));
  const auto last = std::min(channel.size() - 1, static_cast<std::size_t>(std::floor(t1 / interval)));
  for (std::size_t b = first; b <= last; ++b) {
    const double lo = std::max(t0, double(b) * interval);
    const double hi = std::min(t1, double(b + 1) * interval);
    if (hi > lo) channel[b] += power * (hi - lo) / interval;
  }
}

void add_activation(std::vector<double>& channel, double interval, double t0, const ApplianceModel& m) {
  switch (m.shape) {
    case SignatureShape::rectangular:
      add_block(channel, interval, t0, t0 + m.duration_s, m.power_w);
      break;
    case SignatureShape::spike_train:
      for (int p = 0; p < m.pulses; ++p) {
        const double s = t0 + p * pulse_period(m);
        add_block(channel, interval, s, s + m.duration_s, m.power_w);
      }
      break;
    case SignatureShape::cyclic: {
      const double half = m.cycle_period_s / 2.0;
      for (double s = t0; s < t0 + m.duration_s; s += m.cycle_period_s)
        add_block(channel, interval, s, std::min(s + half, t0 + m.duration_s), m.power_w);
      break;
    }
  }
}

std::string house_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "house_%04d", index);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_houses <= 0 || days_per_house <= 0) throw ValidationError("synthetic: need at least one house and day");
  if (base_interval_s <= 0 || kSecondsPerDay % base_interval_s != 0)
    throw ValidationError("synthetic: base_interval_s must divide 86400");
  if (presence_prob < 0 || presence_prob > 1) throw ValidationError("synthetic: presence_prob outside [0,1]");
  if (noise_std < 0 || house_profile_w < 0) throw ValidationError("synthetic: negative noise/profile");
  if (appliance_models.empty()) throw ValidationError("synthetic: no appliance models");
  std::set<std::string> names;
  for (const auto& m : appliance_models) {
    if (m.name.empty() || m.name == "aggregate" || m.name == "timestamp" || !names.insert(m.name).second)
      throw ValidationError("synthetic: invalid or duplicate appliance name '" + m.name + "'");
    if (!(m.power_w > 0) || !(m.duration_s > 0)) throw ValidationError("synthetic: power and duration must be > 0");
    if (m.activations_min < 0 || m.activations_max < m.activations_min)
      throw ValidationError("synthetic: invalid activation range for '" + m.name + "'");
    if (m.pulses < 1 || m.cycle_period_s <= 0) throw ValidationError("synthetic: invalid pulse/cycle settings");
    if (m.presence_prob && (*m.presence_prob < 0 || *m.presence_prob > 1))
      throw ValidationError("synthetic: presence_prob outside [0,1]");
    if (activation_span(m) >= double(kSecondsPerDay))
      throw ValidationError("synthetic: activation of '" + m.name + "' does not fit in a day");
  }
}

SyntheticHouse generate_house(const SynthConfig& config, int index) {
  config.validate();
  const std::string id = house_name(index);
  const double interval = double(config.base_interval_s);
  const auto per_day = static_cast<std::size_t>(kSecondsPerDay / config.base_interval_s);
  const std::size_t n = per_day * static_cast<std::size_t>(config.days_per_house);

  auto appliance_rng = stream_rng(config.seed, "house/" + id + "/appliances");
  auto noise_rng = stream_rng(config.seed, "house/" + id + "/noise");
  auto profile_rng = stream_rng(config.seed, "house/" + id + "/profile");

  // House-specific daily profile: a few Gaussian bumps at fixed times of day.
  std::vector<double> profile(per_day, 0.0);
  if (config.house_profile_w > 0) {
    std::uniform_real_distribution<double> centre(0.0, double(kSecondsPerDay)), width(1800.0, 7200.0),
        amp(0.2, 1.0);
    for (int k = 0; k < 3; ++k) {
      const double c = centre(profile_rng), w = width(profile_rng), a = amp(profile_rng) * config.house_profile_w;
      for (std::size_t j = 0; j < per_day; ++j) {
        double d = std::abs((double(j) + 0.5) * interval - c);
        d = std::min(d, double(kSecondsPerDay) - d);
        profile[j] += a * std::exp(-0.5 * (d / w) * (d / w));
      }
    }
  }

  std::vector<double> background(n);
  {
    std::normal_distribution<double> noise(0.0, config.noise_std > 0 ? config.noise_std : 1.0);
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    for (std::size_t d = 0; d < std::size_t(config.days_per_house); ++d) {
      const double scale = config.house_profile_w > 0 ? jitter(profile_rng) : 1.0;
      for (std::size_t j = 0; j < per_day; ++j) {
        double v = 100.0 + scale * profile[j];
        if (config.noise_std > 0) v += noise(noise_rng);
        background[d * per_day + j] = std::max(0.0, v);
      }
    }
  }

  SyntheticHouse out;
  out.record.source_id = id;
  std::vector<double> aggregate = background;
  for (const auto& m : config.appliance_models) {
    std::bernoulli_distribution owns_dist(m.presence_prob.value_or(config.presence_prob));
    const bool owns = owns_dist(appliance_rng);
    std::vector<double> channel(n, 0.0);
    if (owns) {
      std::uniform_int_distribution<int> count(m.activations_min, m.activations_max);
      std::uniform_real_distribution<double> offset(0.0, double(kSecondsPerDay) - activation_span(m));
      for (int d = 0; d < config.days_per_house; ++d) {
        const int k = count(appliance_rng);
        for (int a = 0; a < k; ++a)
          add_activation(channel, interval, double(d) * double(kSecondsPerDay) + offset(appliance_rng), m);
      }
    }
    for (std::size_t j = 0; j < n; ++j) aggregate[j] += channel[j];
    out.record.appliance_channels.emplace(
        m.name, TimeSeries::from_values(channel, config.base_interval_s, config.start, id));
    out.record.survey_labels[m.name] = owns ? 1 : 0;
  }
  out.record.aggregate = TimeSeries::from_values(aggregate, config.base_interval_s, config.start, id);
  out.background = TimeSeries::from_values(background, config.base_interval_s, config.start, id);
  return out;
}

std::vector<HouseholdRecord> generate_synthetic(const SynthConfig& config) {
  config.validate();
  std::vector<HouseholdRecord> out(static_cast<std::size_t>(config.n_houses));
  parallel_for(out.size(), [&](std::size_t h) { out[h] = generate_house(config, int(h)).record; });
  return out;
}

}  // namespace adbench::dataio

#include "adbench/harness/config.hpp"

#include "adbench/util.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace adbench::harness {

namespace pt = boost::property_tree;

DataSizeMode parse_data_size_mode(std::string_view s) {
  if (s == "none") return DataSizeMode::none;
  if (s == "subset-houses") return DataSizeMode::subset_houses;
  if (s == "subset-series") return DataSizeMode::subset_series;
  throw ValidationError("unknown data_size_mode: " + std::string(s) + " (none|subset-houses|subset-series)");
}

std::string to_string(DataSizeMode m) {
  switch (m) {
    case DataSizeMode::none: return "none";
    case DataSizeMode::subset_houses: return "subset-houses";
    case DataSizeMode::subset_series: return "subset-series";
  }
  return "?";
}

DatasetSchema parse_dataset_schema(std::string_view s) {
  if (s == "synthetic") return DatasetSchema::synthetic;
  if (s == "nilm") return DatasetSchema::nilm;
  if (s == "survey") return DatasetSchema::survey;
  if (s == "preprocessed") return DatasetSchema::preprocessed;
  throw ValidationError("unknown dataset schema: " + std::string(s) + " (synthetic|nilm|survey|preprocessed)");
}

std::string to_string(DatasetSchema s) {
  switch (s) {
    case DatasetSchema::synthetic: return "synthetic";
    case DatasetSchema::nilm: return "nilm";
    case DatasetSchema::survey: return "survey";
    case DatasetSchema::preprocessed: return "preprocessed";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError("config: " + std::string(what) + ": not a number: '" + t + "'");
  return value;
}

bool parse_bool(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ValidationError("config: " + std::string(what) + ": expected true/false, got '" + t + "'");
}

template <class T>
std::vector<T> parse_list(std::string_view s, std::string_view what) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (item.empty()) throw ValidationError("config: " + std::string(what) + ": empty list item in '" + std::string(s) + "'");
    out.push_back(parse_number<T>(item, what));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Reads keys of one section, rejecting any key not consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  template <class T>
  void read(const std::string& key, T& target) {
    const auto v = get(key);
    if (!v) return;
    const std::string what = name_ + "." + key;
    if constexpr (std::is_same_v<T, std::string>) target = *v;
    else if constexpr (std::is_same_v<T, bool>) target = parse_bool(*v, what);
    else target = parse_number<T>(*v, what);
  }

  /// Remaining keys, for sections with open-ended content.
  std::map<std::string, std::string> rest() const {
    std::map<std::string, std::string> out;
    if (tree_)
      for (const auto& [k, v] : *tree_)
        if (!seen_.count(k)) out[k] = trim(v.data());
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : rest()) throw ValidationError("config: unknown key '" + k + "' in [" + name_ + "]");
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> seen_;
};

Section section(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return Section(it == root.not_found() ? nullptr : &it->second, name);
}

}  // namespace

std::vector<std::int64_t> parse_int_list(std::string_view s) { return parse_list<std::int64_t>(s, "list"); }
std::vector<double> parse_double_list(std::string_view s) { return parse_list<double>(s, "list"); }
std::vector<std::uint64_t> parse_seed_list(std::string_view s) { return parse_list<std::uint64_t>(s, "seeds"); }

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= n_runs; ++i) out.push_back(std::uint64_t(i));
  return out;
}

void ExperimentConfig::validate() const {
  if (n_runs < 1) throw ValidationError("config: n_runs must be >= 1");
  if (case_id.empty()) throw ValidationError("config: [case] id is required");
  if (classifier.empty()) throw ValidationError("config: [classifier] name is required");
  if (schema == DatasetSchema::synthetic) synth.validate();
  else if (dataset_path.empty()) throw ValidationError("config: [dataset] path is required for schema " + to_string(schema));
  if (preprocess.target_interval_s <= 0) throw ValidationError("config: target_interval_s must be positive");
  for (auto i : intervals)
    if (i <= 0) throw ValidationError("config: intervals must be positive");
  for (double p : fractions)
    if (!(p > 0 && p <= 1)) throw ValidationError("config: fractions must lie in (0, 1]");
  if (threads < 1) throw ValidationError("config: threads must be >= 1");
  if (time_budget_s < 0) throw ValidationError("config: time_budget_s must be >= 0");
}

std::string ExperimentConfig::digest() const {
  nlohmann::json j;
  j["dataset"] = {{"name", dataset_name}, {"schema", to_string(schema)}, {"path", dataset_path.generic_string()}};
  if (schema == DatasetSchema::synthetic) {
    nlohmann::json apps = nlohmann::json::array();
    for (const auto& a : synth.appliance_models)
      apps.push_back({{"name", a.name},
                      {"shape", dataio::to_string(a.shape)},
                      {"power_w", a.power_w},
                      {"duration_s", a.duration_s},
                      {"activations", {a.activations_min, a.activations_max}},
                      {"pulses", a.pulses},
                      {"pulse_period_s", a.pulse_period_s},
                      {"cycle_period_s", a.cycle_period_s},
                      {"presence_prob", a.presence_prob ? nlohmann::json(*a.presence_prob) : nlohmann::json()}});
    j["synthetic"] = {{"n_houses", synth.n_houses},         {"days_per_house", synth.days_per_house},
                      {"base_interval_s", synth.base_interval_s}, {"presence_prob", synth.presence_prob},
                      {"noise_std", synth.noise_std},       {"house_profile_w", synth.house_profile_w},
                      {"start", synth.start},               {"seed", synth.seed},
                      {"appliances", apps}};
  }
  j["case"] = case_id;
  j["preprocess"] = {{"target_interval_s", preprocess.target_interval_s},
                     {"max_gap_s", preprocess.max_gap_s},
                     {"slice", preprocess::to_string(preprocess.slice)},
                     {"on_threshold_w", preprocess.on_threshold_w},
                     {"on_min_samples", preprocess.on_min_samples},
                     {"split", preprocess::to_string(preprocess.split)},
                     {"holdout_houses", preprocess.holdout_houses}};
  j["classifier"] = {{"name", classifier}, {"overrides", overrides}};
  j["run"] = {{"intervals", intervals},
              {"seeds", run_seeds()},
              {"time_budget_s", time_budget_s},
              {"data_size_mode", to_string(data_size_mode)},
              {"fractions", fractions}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: " + e.message(), e.line());
  }
  static const std::set<std::string> known{"dataset", "synthetic", "case", "preprocess", "classifier", "run"};
  for (const auto& [name, _] : root)
    if (!known.count(name) && name.rfind("appliance:", 0) != 0)
      throw ValidationError("config: unknown section [" + name + "]");

  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  {
    auto s = section(root, "dataset");
    s.read("name", c.dataset_name);
    if (auto v = s.get("schema")) c.schema = parse_dataset_schema(*v);
    if (auto v = s.get("path"); v && !v->empty()) c.dataset_path = resolve(*v);
    s.finish();
  }
  {
    auto s = section(root, "synthetic");
    s.read("n_houses", c.synth.n_houses);
    s.read("days_per_house", c.synth.days_per_house);
    s.read("base_interval_s", c.synth.base_interval_s);
    s.read("presence_prob", c.synth.presence_prob);
    s.read("noise_std", c.synth.noise_std);
    s.read("house_profile_w", c.synth.house_profile_w);
    s.read("seed", c.synth.seed);
    if (auto v = s.get("start")) {
      const auto t = dataio::parse_iso8601(*v);
      if (!t) throw ValidationError("config: synthetic.start: not an ISO-8601 UTC timestamp: " + *v);
      c.synth.start = *t;
    }
    s.finish();
  }
  for (const auto& [name, tree] : root) {
    if (name.rfind("appliance:", 0) != 0) continue;
    Section s(&tree, name);
    dataio::ApplianceModel m;
    m.name = trim(name.substr(10));
    if (m.name.empty()) throw ValidationError("config: appliance section without a name");
    if (auto v = s.get("shape")) m.shape = dataio::parse_signature_shape(*v);
    s.read("power_w", m.power_w);
    s.read("duration_s", m.duration_s);
    s.read("activations_min", m.activations_min);
    s.read("activations_max", m.activations_max);
    s.read("pulses", m.pulses);
    s.read("pulse_period_s", m.pulse_period_s);
    s.read("cycle_period_s", m.cycle_period_s);
    if (auto v = s.get("presence_prob")) m.presence_prob = parse_number<double>(*v, name + ".presence_prob");
    s.finish();
    c.synth.appliance_models.push_back(std::move(m));
  }
  {
    auto s = section(root, "case");
    s.read("id", c.case_id);
    s.finish();
    if (c.case_id.empty() && c.schema == DatasetSchema::synthetic && c.synth.appliance_models.size() == 1)
      c.case_id = c.synth.appliance_models.front().name;
  }
  {
    auto s = section(root, "preprocess");
    s.read("target_interval_s", c.preprocess.target_interval_s);
    s.read("max_gap_s", c.preprocess.max_gap_s);
    if (auto v = s.get("slice")) c.preprocess.slice = preprocess::parse_slice_mode(*v);
    s.read("on_threshold_w", c.preprocess.on_threshold_w);
    s.read("on_min_samples", c.preprocess.on_min_samples);
    if (auto v = s.get("split")) c.preprocess.split = preprocess::parse_split_mode(*v);
    s.read("holdout_houses", c.preprocess.holdout_houses);
    s.finish();
  }
  {
    auto s = section(root, "classifier");
    s.read("name", c.classifier);
    c.overrides = s.rest();
  }
  {
    auto s = section(root, "run");
    s.read("n_runs", c.n_runs);
    if (auto v = s.get("seeds")) c.seeds = parse_seed_list(*v);
    s.read("time_budget_s", c.time_budget_s);
    s.read("isolate", c.isolate);
    if (auto v = s.get("intervals")) c.intervals = parse_list<std::int64_t>(*v, "run.intervals");
    if (auto v = s.get("data_size_mode")) c.data_size_mode = parse_data_size_mode(*v);
    if (auto v = s.get("fractions")) c.fractions = parse_list<double>(*v, "run.fractions");
    if (auto v = s.get("output")) c.output = resolve(*v);
    s.read("threads", c.threads);
    s.finish();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace adbench::harness

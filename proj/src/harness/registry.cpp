#include "adbench/harness/registry.hpp"

#include "adbench/classic/boss.hpp"
#include "adbench/classic/interval.hpp"
#include "adbench/classic/knn.hpp"
#include "adbench/kernel/rocket.hpp"
#include "adbench/neural/models.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>

namespace adbench::harness {

namespace {

class Knobs {
 public:
  Knobs(const std::string& classifier, const Overrides& o) : classifier_(classifier), o_(o) {}

  template <class T>
  void read(const std::string& key, T& target) {
    used_.insert(key);
    const auto it = o_.find(key);
    if (it == o_.end()) return;
    const std::string& s = it->second;
    if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1") target = true;
      else if (s == "false" || s == "0") target = false;
      else fail(key, s);
    } else {
      T v{};
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) fail(key, s);
      target = v;
    }
  }

  void finish() const {
    for (const auto& [k, v] : o_)
      if (!used_.count(k)) throw ValidationError("classifier " + classifier_ + ": unknown override '" + k + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& value) const {
    throw ValidationError("classifier " + classifier_ + ": bad value for " + key + ": '" + value + "'");
  }

  std::string classifier_;
  const Overrides& o_;
  std::set<std::string> used_;
};

using Fitter = std::function<std::unique_ptr<FittedClassifier>(const ExperimentSplit*, std::uint64_t, Knobs&)>;

// A null split means "parse overrides only".
std::unique_ptr<FittedClassifier> knn(classic::Metric metric, const ExperimentSplit* s, Knobs& k) {
  classic::KnnParams p;
  p.metric = metric;
  k.read("k", p.k);
  if (metric == classic::Metric::dtw) {
    double band = *p.band;
    k.read("band", band);
    p.band = band;
  }
  k.finish();
  return s ? classic::fit_knn(s->train, p) : nullptr;
}

std::unique_ptr<FittedClassifier> boss_ensemble(classic::EnsembleMode mode, const ExperimentSplit* s,
                                                std::uint64_t seed, Knobs& k) {
  classic::BossEnsembleParams p;
  p.mode = mode;
  k.read("alphabet", p.alphabet);
  if (mode == classic::EnsembleMode::full) {
    k.read("retention_factor", p.retention_factor);
    k.read("l_grid_size", p.l_grid_size);
  } else {
    k.read("max_members", p.max_members);
  }
  k.finish();
  return s ? classic::fit_boss_ensemble(s->train, p, seed) : nullptr;
}

std::unique_ptr<FittedClassifier> rocket(kernel::RocketVariant v, const ExperimentSplit* s, std::uint64_t seed,
                                         Knobs& k) {
  kernel::RocketFamilyParams p;
  k.read("n_kernels", p.n_kernels);
  k.read("n_features", p.minirocket_features);
  k.read("members", p.arsenal_members);
  k.read("member_kernels", p.arsenal_kernels);
  k.finish();
  return s ? kernel::fit_rocket_family(s->train, v, seed, p) : nullptr;
}

std::unique_ptr<FittedClassifier> neural(neural::Architecture a, const ExperimentSplit* s, std::uint64_t seed,
                                         Knobs& k) {
  neural::TrainParams p;
  k.read("lr", p.lr);
  k.read("batch_size", p.batch_size);
  k.read("max_epochs", p.max_epochs);
  k.read("patience", p.patience);
  k.read("stop_when_perfect", p.stop_when_perfect);
  k.finish();
  return s ? neural::fit_neural(a, s->train, s->validation, seed, p) : nullptr;
}

const std::vector<std::pair<std::string, Fitter>>& table() {
  using classic::EnsembleMode;
  static const std::vector<std::pair<std::string, Fitter>> t = {
      {"knn-euclid", [](auto* s, auto, auto& k) { return knn(classic::Metric::euclid, s, k); }},
      {"knn-dtw", [](auto* s, auto, auto& k) { return knn(classic::Metric::dtw, s, k); }},
      {"tsf",
       [](auto* s, auto seed, auto& k) -> std::unique_ptr<FittedClassifier> {
         classic::TsfParams p;
         k.read("n_trees", p.n_trees);
         k.read("intervals_per_tree", p.intervals_per_tree);
         k.read("min_interval", p.min_interval);
         k.finish();
         return s ? classic::fit_tsf(s->train, p, seed) : nullptr;
       }},
      {"rise",
       [](auto* s, auto seed, auto& k) -> std::unique_ptr<FittedClassifier> {
         classic::RiseParams p;
         k.read("n_trees", p.n_trees);
         k.finish();
         return s ? classic::fit_rise(s->train, p, seed) : nullptr;
       }},
      {"boss",
       [](auto* s, auto, auto& k) -> std::unique_ptr<FittedClassifier> {
         classic::BossParams p;
         k.read("window_len", p.window_len);
         k.read("word_len", p.word_len);
         k.read("alphabet", p.alphabet);
         k.read("normalize", p.normalize_windows);
         k.finish();
         return s ? classic::fit_boss(s->train, p) : nullptr;
       }},
      {"boss-ensemble", [](auto* s, auto seed, auto& k) { return boss_ensemble(EnsembleMode::full, s, seed, k); }},
      {"cboss", [](auto* s, auto seed, auto& k) { return boss_ensemble(EnsembleMode::compact, s, seed, k); }},
      {"rocket", [](auto* s, auto seed, auto& k) { return rocket(kernel::RocketVariant::rocket, s, seed, k); }},
      {"minirocket", [](auto* s, auto seed, auto& k) { return rocket(kernel::RocketVariant::minirocket, s, seed, k); }},
      {"arsenal", [](auto* s, auto seed, auto& k) { return rocket(kernel::RocketVariant::arsenal, s, seed, k); }},
      {"convnet", [](auto* s, auto seed, auto& k) { return neural(neural::Architecture::convnet, s, seed, k); }},
      {"resnet", [](auto* s, auto seed, auto& k) { return neural(neural::Architecture::resnet, s, seed, k); }},
      {"inceptiontime",
       [](auto* s, auto seed, auto& k) { return neural(neural::Architecture::inceptiontime, s, seed, k); }},
  };
  return t;
}

const Fitter& lookup(const std::string& name) {
  for (const auto& [n, f] : table())
    if (n == name) return f;
  std::string known;
  for (const auto& [n, f] : table()) known += (known.empty() ? "" : ", ") + n;
  throw ValidationError("unknown classifier '" + name + "' (known: " + known + ")");
}

}  // namespace

const std::vector<std::string>& classifier_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [n, f] : table()) out.push_back(n);
    return out;
  }();
  return names;
}

bool is_known_classifier(std::string_view name) {
  const auto& n = classifier_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

void check_classifier(const std::string& name, const Overrides& overrides) {
  Knobs k(name, overrides);
  lookup(name)(nullptr, 0, k);
}

std::unique_ptr<FittedClassifier> fit_classifier(const std::string& name, const ExperimentSplit& split,
                                                 std::uint64_t seed, const Overrides& overrides) {
  Knobs k(name, overrides);
  return lookup(name)(&split, seed, k);
}

}  // namespace adbench::harness

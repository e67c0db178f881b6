#include "adbench/classic/boss.hpp"

#include "adbench/util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace adbench::classic {

Index BossParams::available_slots() const {
  const Index first = normalize_windows ? 1 : 0;
  return 2 * (window_len / 2 - first + 1);
}

void BossParams::validate(Index series_length) const {
  if (window_len < 10 || window_len > series_length)
    throw ValidationError("boss: window length " + std::to_string(window_len) + " outside [10, " +
                          std::to_string(series_length) + "]");
  if (word_len < 2 || word_len % 2 != 0) throw ValidationError("boss: word length must be even and >= 2");
  if (word_len > available_slots())
    throw ValidationError("boss: word length " + std::to_string(word_len) + " exceeds the " +
                          std::to_string(available_slots()) + " Fourier slots of a window of " +
                          std::to_string(window_len));
  if (alphabet < 2) throw ValidationError("boss: alphabet must be >= 2");
  if (std::pow(double(alphabet), double(word_len)) > 1.8e19) throw ValidationError("boss: word does not fit 64 bits");
}

WordHistogram::WordHistogram(std::vector<std::pair<Word, std::uint32_t>> sorted_counts)
    : counts_(std::move(sorted_counts)) {}

std::uint32_t WordHistogram::count(Word w) const {
  const auto it = std::lower_bound(counts_.begin(), counts_.end(), w,
                                   [](const auto& e, Word x) { return e.first < x; });
  return it != counts_.end() && it->first == w ? it->second : 0;
}

std::uint64_t WordHistogram::total() const {
  std::uint64_t t = 0;
  for (const auto& e : counts_) t += e.second;
  return t;
}

namespace {

// Fourier tables for one window length; row r holds slot r's basis.
class SfaKernel {
 public:
  explicit SfaKernel(const BossParams& p) : params_(p), basis_(p.word_len, p.window_len) {
    const Index first = p.normalize_windows ? 1 : 0;
    const Index l = p.window_len;
    for (Index s = 0; s < p.word_len; ++s) {
      const Index k = first + s / 2;
      for (Index j = 0; j < l; ++j) {
        const double angle = 2.0 * std::numbers::pi * double((j * k) % l) / double(l);
        basis_(s, j) = s % 2 == 0 ? std::cos(angle) : -std::sin(angle);
      }
    }
  }

  // Copies into an owned (aligned) vector first: vectorized reductions over a segment
  // round differently depending on its address, which would make words position-dependent.
  Vector coefficients(const Vector& window) const {
    if (!params_.normalize_windows) return basis_ * window;
    const double l = double(window.size());
    const double mean = window.sum() / l;
    const double sd = std::sqrt(std::max(0.0, (window.array() - mean).square().sum() / l));
    if (sd <= 1e-8 * std::max(1.0, std::abs(mean))) return Vector::Zero(params_.word_len);
    const Vector z = (window.array() - mean) / sd;
    return basis_ * z;
  }

 private:
  BossParams params_;
  Matrix basis_;
};

Word encode(const Vector& coeffs, const SfaBins& bins) {
  Word w = 0;
  for (Index s = 0; s < coeffs.size(); ++s)
    w = w * Word(bins.params.alphabet) + Word(sfa_symbol(coeffs[s], bins.edges[std::size_t(s)]));
  return w;
}

WordHistogram transform_with(const SfaKernel& kernel, const Vector& series, const SfaBins& bins) {
  const Index l = bins.params.window_len;
  if (series.size() < l) throw ValidationError("boss_transform: series shorter than the window");
  std::vector<Word> words;
  words.reserve(std::size_t(series.size() - l + 1));
  for (Index t = 0; t + l <= series.size(); ++t) {
    const Word w = encode(kernel.coefficients(series.segment(t, l)), bins);
    if (bins.params.numerosity_reduction && !words.empty() && words.back() == w) continue;
    words.push_back(w);
  }
  std::sort(words.begin(), words.end());
  std::vector<std::pair<Word, std::uint32_t>> counts;
  for (Word w : words) {
    if (!counts.empty() && counts.back().first == w) ++counts.back().second;
    else counts.emplace_back(w, 1);
  }
  return WordHistogram(std::move(counts));
}

}  // namespace

Vector sfa_coefficients(const Vector& window, const BossParams& params) {
  if (window.size() != params.window_len) throw DimensionError("sfa: window length mismatch");
  return SfaKernel(params).coefficients(window);
}

SfaBins train_mcb(const Dataset& series, const BossParams& params) {
  if (series.empty()) throw ValidationError("mcb: no training series");
  params.validate(Index(series.front().size()));
  const SfaKernel kernel(params);
  const Index l = params.window_len;
  std::vector<std::vector<double>> columns(std::size_t(params.word_len));
  for (const auto& d : series) {
    for (Index t = 0; t + l <= d.values.size(); ++t) {
      const Vector c = kernel.coefficients(d.values.segment(t, l));
      for (Index s = 0; s < c.size(); ++s) columns[std::size_t(s)].push_back(c[s]);
    }
  }
  SfaBins bins{params, {}};
  for (auto& col : columns) {
    std::sort(col.begin(), col.end());
    std::vector<double> edges;
    for (int b = 1; b < params.alphabet; ++b) edges.push_back(col[col.size() * std::size_t(b) / std::size_t(params.alphabet)]);
    bins.edges.push_back(std::move(edges));
  }
  return bins;
}

int sfa_symbol(double value, const std::vector<double>& edges) {
  return int(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

Word sfa_word(const Vector& window, const SfaBins& bins) {
  if (!bins.trained()) throw ValidationError("sfa_word: bins are not trained");
  return encode(sfa_coefficients(window, bins.params), bins);
}

std::vector<int> word_symbols(Word word, const BossParams& params) {
  std::vector<int> out(std::size_t(params.word_len));
  for (int s = params.word_len - 1; s >= 0; --s) {
    out[std::size_t(s)] = int(word % Word(params.alphabet));
    word /= Word(params.alphabet);
  }
  return out;
}

WordHistogram boss_transform(const Vector& series, const SfaBins& bins) {
  if (!bins.trained()) throw ValidationError("boss_transform: bins are not trained");
  return transform_with(SfaKernel(bins.params), series, bins);
}

double boss_distance(const WordHistogram& a, const WordHistogram& b) {
  double d = 0;
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t j = 0;
  for (const auto& [word, count] : ea) {
    while (j < eb.size() && eb[j].first < word) ++j;
    const double other = (j < eb.size() && eb[j].first == word) ? double(eb[j].second) : 0.0;
    const double diff = double(count) - other;
    d += diff * diff;
  }
  return d;
}

// --- single BOSS --------------------------------------------------------------

BossClassifier::BossClassifier(SfaBins bins, std::vector<WordHistogram> histograms, std::vector<int> labels,
                               std::size_t length)
    : FittedClassifier(0), bins_(std::move(bins)), histograms_(std::move(histograms)), labels_(std::move(labels)),
      length_(length) {}

std::size_t BossClassifier::nearest(const WordHistogram& query, std::size_t exclude) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < histograms_.size(); ++i) {
    if (i == exclude) continue;
    const double d = boss_distance(query, histograms_[i]);
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  return best_i;
}

double BossClassifier::train_accuracy() const {
  if (histograms_.size() < 2) return 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < histograms_.size(); ++i)
    correct += labels_[nearest(histograms_[i], i)] == labels_[i];
  return double(correct) / double(histograms_.size());
}

double BossClassifier::score_one(const Vector& values) const {
  return labels_[nearest(boss_transform(values, bins_), histograms_.size())];
}

std::vector<double> BossClassifier::score_many(const Dataset& data) const {
  std::vector<double> out(data.size());
  const SfaKernel kernel(bins_.params);
  parallel_for(data.size(), [&](std::size_t i) {
    out[i] = labels_[nearest(transform_with(kernel, data[i].values, bins_), histograms_.size())];
  });
  return out;
}

std::unique_ptr<BossClassifier> fit_boss(const Dataset& train, BossParams params) {
  if (train.empty()) throw ValidationError("boss: empty training set");
  const auto length = train.front().size();
  for (const auto& d : train)
    if (d.size() != length) throw DimensionError("boss: training series differ in length");
  params.validate(Index(length));
  auto bins = train_mcb(train, params);
  const SfaKernel kernel(params);
  std::vector<WordHistogram> hists(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) hists[i] = transform_with(kernel, train[i].values, bins);
  return std::make_unique<BossClassifier>(std::move(bins), std::move(hists), labels_of(train), length);
}

// --- ensembles ------------------------------------------------------------------

BossEnsemble::BossEnsemble(EnsembleMode mode, std::vector<Member> members, std::size_t length, std::uint64_t seed)
    : FittedClassifier(seed), mode_(mode), members_(std::move(members)), length_(length) {}

double BossEnsemble::score_one(const Vector& values) const {
  double weighted = 0, total = 0;
  for (const auto& m : members_) {
    const double w = mode_ == EnsembleMode::compact ? m.accuracy : 1.0;
    weighted += w * m.model->predict(values);
    total += w;
  }
  if (total == 0) {  // every compact member scored zero accuracy; fall back to plain votes
    for (const auto& m : members_) weighted += m.model->predict(values);
    total = double(members_.size());
  }
  return weighted / total;
}

std::unique_ptr<BossEnsemble> fit_boss_ensemble(const Dataset& train, BossEnsembleParams params, std::uint64_t seed) {
  if (train.empty()) throw ValidationError("boss-ensemble: empty training set");
  const auto length = Index(train.front().size());
  if (length < 10) throw ValidationError("boss-ensemble: series length below 10");

  std::vector<BossParams> candidates;
  auto admissible = [&](const BossParams& p) {
    try {
      p.validate(length);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  };
  if (params.mode == EnsembleMode::full) {
    std::set<Index> lengths;
    const int g = std::max(1, params.l_grid_size);
    for (int i = 0; i < g; ++i)
      lengths.insert(g == 1 ? 10 : Index(std::llround(10.0 + double(i) * double(length - 10) / double(g - 1))));
    for (Index l : lengths)
      for (int w : params.word_lengths)
        for (bool norm : {true, false}) {
          BossParams p{l, w, params.alphabet, norm, true};
          if (admissible(p)) candidates.push_back(p);
        }
  } else {
    auto rng = stream_rng(seed, "cboss");
    std::uniform_int_distribution<Index> l_dist(10, length);
    std::uniform_int_distribution<std::size_t> w_dist(0, params.word_lengths.size() - 1);
    std::bernoulli_distribution norm_dist(0.5);
    for (int attempt = 0; int(candidates.size()) < params.max_members && attempt < 50 * params.max_members; ++attempt) {
      BossParams p{l_dist(rng), params.word_lengths[w_dist(rng)], params.alphabet, norm_dist(rng), true};
      if (admissible(p)) candidates.push_back(p);
    }
  }
  if (candidates.empty()) throw ValidationError("boss-ensemble: no admissible member parameters");

  std::vector<BossEnsemble::Member> members(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    auto model = fit_boss(train, candidates[i]);
    const double acc = model->train_accuracy();
    members[i] = {std::move(model), acc};
  });

  if (params.mode == EnsembleMode::full) {
    double best = 0;
    for (const auto& m : members) best = std::max(best, m.accuracy);
    std::vector<BossEnsemble::Member> kept;
    for (auto& m : members)
      if (m.accuracy >= params.retention_factor * best) kept.push_back(std::move(m));
    members = std::move(kept);
  }
  return std::make_unique<BossEnsemble>(params.mode, std::move(members), std::size_t(length), seed);
}

}  // namespace adbench::classic

#pragma once

#include "adbench/core.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace adbench::classic {

struct BossParams {
  Index window_len = 10;
  int word_len = 10;
  int alphabet = 2;
  bool normalize_windows = true;
  bool numerosity_reduction = true;

  /// Number of real/imaginary Fourier slots a window of this length offers.
  Index available_slots() const;
  /// Throws ValidationError unless 10 <= l <= T, w even in [2, available], alphabet >= 2.
  void validate(Index series_length) const;
};

using Word = std::uint64_t;

/// Sparse word counts, sorted by word. Only words with count >= 1 are stored.
class WordHistogram {
 public:
  WordHistogram() = default;
  explicit WordHistogram(std::vector<std::pair<Word, std::uint32_t>> sorted_counts);

  std::uint32_t count(Word w) const;
  std::size_t distinct() const noexcept { return counts_.size(); }
  std::uint64_t total() const;
  const std::vector<std::pair<Word, std::uint32_t>>& entries() const noexcept { return counts_; }

  bool operator==(const WordHistogram&) const = default;

 private:
  std::vector<std::pair<Word, std::uint32_t>> counts_;
};

/// Multiple Coefficient Binning: per Fourier slot, alphabet-1 equi-depth edges.
struct SfaBins {
  BossParams params;
  std::vector<std::vector<double>> edges;  // [slot][edge]
  bool trained() const noexcept { return !edges.empty(); }
};

/// First `word_len` Fourier slots of a window (re/im interleaved), after optional
/// z-normalization; the DC coefficient is skipped when normalizing.
Vector sfa_coefficients(const Vector& window, const BossParams& params);

/// Trains bins on every sliding window (stride 1) of the given series.
SfaBins train_mcb(const Dataset& series, const BossParams& params);

/// Symbol of one coefficient: number of edges <= value.
int sfa_symbol(double value, const std::vector<double>& edges);

Word sfa_word(const Vector& window, const SfaBins& bins);
std::vector<int> word_symbols(Word word, const BossParams& params);

WordHistogram boss_transform(const Vector& series, const SfaBins& bins);

/// Sum over words of `a` of (a[w] - b[w])^2. Not symmetric.
double boss_distance(const WordHistogram& a, const WordHistogram& b);

class BossClassifier final : public FittedClassifier {
 public:
  BossClassifier(SfaBins bins, std::vector<WordHistogram> histograms, std::vector<int> labels, std::size_t length);

  std::string kind() const override { return "boss"; }
  std::size_t series_length() const override { return length_; }
  const BossParams& params() const noexcept { return bins_.params; }
  const SfaBins& bins() const noexcept { return bins_; }

  /// Leave-one-out 1-NN accuracy on the training histograms.
  double train_accuracy() const;

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  std::size_t nearest(const WordHistogram& query, std::size_t exclude) const;

  SfaBins bins_;
  std::vector<WordHistogram> histograms_;
  std::vector<int> labels_;
  std::size_t length_;
};

std::unique_ptr<BossClassifier> fit_boss(const Dataset& train, BossParams params = {});

enum class EnsembleMode { full, compact };

struct BossEnsembleParams {
  EnsembleMode mode = EnsembleMode::full;
  int alphabet = 4;
  double retention_factor = 0.92;  // full mode
  int l_grid_size = 10;            // full mode: evenly spaced window lengths in [10, T]
  std::vector<int> word_lengths{16, 14, 12, 10, 8};
  int max_members = 50;  // compact mode
};

class BossEnsemble final : public FittedClassifier {
 public:
  struct Member {
    std::unique_ptr<BossClassifier> model;
    double accuracy;
  };

  BossEnsemble(EnsembleMode mode, std::vector<Member> members, std::size_t length, std::uint64_t seed);

  std::string kind() const override { return mode_ == EnsembleMode::full ? "boss-ensemble" : "cboss"; }
  std::size_t series_length() const override { return length_; }
  std::size_t member_count() const noexcept { return members_.size(); }
  const Member& member(std::size_t i) const { return members_.at(i); }

 protected:
  double score_one(const Vector& values) const override;

 private:
  EnsembleMode mode_;
  std::vector<Member> members_;
  std::size_t length_;
};

std::unique_ptr<BossEnsemble> fit_boss_ensemble(const Dataset& train, BossEnsembleParams params = {},
                                                std::uint64_t seed = 1);

}  // namespace adbench::classic

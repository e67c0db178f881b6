#include "adbench/classic/boss.hpp"
#include "adbench/classic/distance.hpp"
#include "adbench/classic/interval.hpp"
#include "adbench/classic/knn.hpp"
#include "adbench/classic/tree.hpp"
#include "adbench/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>

using namespace adbench;
using namespace adbench::classic;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(Index(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double test_f1(const FittedClassifier& m, const Dataset& test) {
  return eval::macro_f1(labels_of(test), m.predict_labels(test));
}

struct Separable {
  Dataset train = fixture::separable(80, 48, 21, 2000, 4, 10);
  Dataset test = fixture::separable(40, 48, 22, 2000, 4, 10);
};

}  // namespace

TEST_CASE("euclid_dist") {
  CHECK(euclid_dist(vec({1, 2, 3}), vec({1, 2, 3})) == 0.0);
  CHECK(euclid_dist(vec({0, 0, 1}), vec({0, 1, 1})) == 1.0);
  CHECK_THROWS_AS(euclid_dist(vec({0, 0}), vec({0})), DimensionError);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vector a = fixture::random_vector(17, rng), b = fixture::random_vector(17, rng);
    CHECK(euclid_dist(a, b) == euclid_dist(b, a));
  }
}

TEST_CASE("dtw_dist hand examples") {
  CHECK(dtw_dist(vec({1, 2, 3}), vec({1, 2, 3})) == 0.0);
  CHECK(dtw_dist(vec({0, 0, 1}), vec({0, 1, 1})) == 0.0);
  CHECK(dtw_dist(vec({0, 1}), vec({2, 3})) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
  CHECK_THROWS_AS(dtw_dist(vec({1}), vec({1}), 1.5), ValidationError);
  CHECK_THROWS_AS(dtw_dist(vec({1}), vec({1}), -0.1), ValidationError);
}

TEST_CASE("dtw_dist equals the memoized recursion") {
  Rng rng(2);
  std::uniform_int_distribution<int> len(1, 32);
  std::uniform_real_distribution<double> band(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Index n = len(rng), m = i % 3 == 0 ? len(rng) : n;
    const Vector a = fixture::random_vector(n, rng), b = fixture::random_vector(m, rng);
    CHECK(dtw_dist(a, b) == oracle::dtw_recursive(a, b, std::max(n, m)));
    const double f = band(rng);
    CHECK(dtw_dist(a, b, f) == oracle::dtw_recursive(a, b, dtw_window(n, m, f)));
    if (n == m) {
      CHECK(dtw_dist(a, b) <= euclid_dist(a, b));
      CHECK(dtw_dist(a, b, 0.0) == euclid_dist(a, b));
    }
  }
}

TEST_CASE("dtw early abandon only triggers above the bound") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vector a = fixture::random_vector(20, rng), b = fixture::random_vector(20, rng);
    const double d = dtw_dist(a, b);
    CHECK(dtw_dist(a, b, std::nullopt, d * d * 1.0001) == d);
    const double cut = dtw_dist(a, b, std::nullopt, d * d * 0.5);
    CHECK((std::isinf(cut) || cut == d));
  }
}

TEST_CASE("1-NN matches an exhaustive scan") {
  Rng rng(4);
  Dataset train;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 50; ++i) train.push_back(make_instance(fixture::random_vector(16, rng), coin(rng), "c", "h"));
  for (auto metric : {Metric::euclid, Metric::dtw}) {
    KnnParams p;
    p.metric = metric;
    const auto model = fit_knn(train, p);
    for (int q = 0; q < 50; ++q) {
      const Vector query = fixture::random_vector(16, rng);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < train.size(); ++i) {
        const double d = metric == Metric::euclid ? euclid_dist(query, train[i].values)
                                                  : dtw_dist(query, train[i].values, p.band);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      CHECK(model->nearest(query) == best);
      CHECK(model->predict(query) == train[best].label);
    }
    for (const auto& d : train) CHECK(model->predict(d.values) == d.label);
  }
  CHECK_THROWS_AS(fit_knn(Dataset{}), ValidationError);
}

TEST_CASE("k-NN scores are vote fractions") {
  Dataset train;
  for (int i = 0; i < 4; ++i) train.push_back(make_instance(Vector::Constant(3, double(i)), i < 3 ? 1 : 0, "c", "h"));
  KnnParams p;
  p.k = 4;
  CHECK(fit_knn(train, p)->predict_score(Vector(Vector::Zero(3))) == 0.75);
}

TEST_CASE("separable case: 1-NN euclid") {
  Separable s;
  CHECK(test_f1(*fit_knn(s.train), s.test) >= 0.9);
}

TEST_CASE("TSF interval features") {
  const auto f = tsf_interval_features(vec({1, 2, 3}), {0, 3});
  CHECK(f.mean == doctest::Approx(2.0));
  CHECK(f.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(f.slope == doctest::Approx(1.0));
  const auto c = tsf_interval_features(Vector(Vector::Constant(9, 4.0)), {2, 7});
  CHECK(c.mean == 4.0);
  CHECK(c.std == 0.0);
  CHECK(c.slope == 0.0);
  const auto one = tsf_interval_features(vec({5, 6}), {1, 2});
  CHECK(one.std == 0.0);
  CHECK(one.slope == 0.0);
  CHECK_THROWS_AS(tsf_interval_features(vec({1, 2}), {1, 1}), ValidationError);
  CHECK_THROWS_AS(tsf_interval_features(vec({1, 2}), {0, 3}), ValidationError);
}

TEST_CASE("TSF features match a least-squares oracle") {
  Rng rng(5);
  const Vector x = fixture::random_vector(200, rng);
  std::uniform_int_distribution<Index> start(0, 197);
  for (int i = 0; i < 1000; ++i) {
    const Index s = start(rng);
    std::uniform_int_distribution<Index> end(s + 2, 200);
    const Index e = end(rng);
    const auto f = tsf_interval_features(x, {s, e});
    const Index n = e - s;
    Matrix a(n, 2);
    for (Index j = 0; j < n; ++j) a.row(j) << 1.0, double(j);
    const Vector seg = x.segment(s, n);
    const Vector beta = (a.transpose() * a).ldlt().solve(a.transpose() * seg);
    const double mean = seg.mean();
    const double sd = std::sqrt((seg.array() - mean).square().mean());
    CHECK(f.mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(f.std == doctest::Approx(sd).epsilon(1e-9));
    CHECK(f.slope == doctest::Approx(beta[1]).epsilon(1e-9).scale(1e-6));
  }
}

TEST_CASE("RISE interval features") {
  const Vector constant = Vector::Constant(64, 3.0);
  const Vector f = rise_interval_features(constant, {0, 64});
  REQUIRE(f.size() == 32 + 16);
  CHECK(f[0] == doctest::Approx(64.0 * 64.0 * 9.0));
  CHECK(f.segment(1, 31).cwiseAbs().maxCoeff() < 1e-18 * f[0] + 1e-9);
  CHECK(f.tail(16).isZero());

  Vector alt(64);
  for (Index i = 0; i < 64; ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  CHECK(std::abs(rise_interval_features(alt, {0, 64})[32] + 1.0) < 1e-9);

  CHECK_THROWS_AS(rise_interval_features(constant, {0, 15}), ValidationError);
}

TEST_CASE("RISE power spectrum matches a naive DFT") {
  Rng rng(6);
  for (Index len : {16, 17, 31, 64, 100, 128, 250}) {
    const Vector x = fixture::random_vector(len + 7, rng);
    const Vector f = rise_interval_features(x, {3, 3 + len});
    const auto dft = oracle::naive_dft(x.segment(3, len));
    double scale = 0;
    for (Index k = 0; k < len / 2; ++k) scale = std::max(scale, std::norm(dft[std::size_t(k)]));
    for (Index k = 0; k < len / 2; ++k) {
      const double expected = std::norm(dft[std::size_t(k)]);
      CHECK(std::abs(f[k] - expected) <= 1e-9 * std::max(expected, 1e-3 * scale));
    }
    // ACF at lag h: Pearson correlation of the overlapping segments.
    const Vector seg = x.segment(3, len);
    for (Index lag = 1; lag <= std::min<Index>(100, len / 4); ++lag) {
      const Index m = len - lag;
      const Vector a = seg.head(m), b = seg.tail(m);
      const double ma = a.mean(), mb = b.mean();
      double sab = 0, saa = 0, sbb = 0;
      for (Index i = 0; i < m; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
      }
      CHECK(f[len / 2 + lag - 1] == doctest::Approx(sab / std::sqrt(saa * sbb)).epsilon(1e-9));
    }
  }
}

TEST_CASE("decision tree fits separable features") {
  Matrix x(6, 2);
  x << 0, 5, 1, 4, 2, 3, 10, 5, 11, 4, 12, 3;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const auto t = DecisionTree::fit(x, y);
  for (Index i = 0; i < 6; ++i) CHECK(t.vote(x.row(i)) == y[std::size_t(i)]);
  CHECK(t.node_count() == 3);
  CHECK(t.depth() == 1);
}

TEST_CASE("TSF and RISE: sizes, determinism, separable case") {
  Separable s;
  TsfParams tp;
  const auto tsf = fit_tsf(s.train, tp, 7);
  CHECK(tsf->member_count() == 200);
  for (std::size_t m = 0; m < tsf->member_count(); ++m) {
    CHECK(tsf->member(m).intervals.size() == std::size_t(std::sqrt(48.0)));
    for (const auto& iv : tsf->member(m).intervals) CHECK(iv.length() >= 3);
  }
  CHECK(test_f1(*tsf, s.test) >= 0.9);
  CHECK(fit_tsf(s.train, tp, 7)->predict_scores(s.test) == tsf->predict_scores(s.test));

  const auto rise = fit_rise(s.train, {}, 7);
  CHECK(rise->member_count() == 500);
  CHECK(rise->member(0).intervals.front() == Interval{0, 48});
  for (std::size_t m = 1; m < rise->member_count(); ++m) CHECK(rise->member(m).intervals.front().length() >= 16);
  CHECK(test_f1(*rise, s.test) >= 0.9);
  set_num_threads(4);
  CHECK(fit_rise(s.train, {}, 7)->predict_scores(s.test) == rise->predict_scores(s.test));
  set_num_threads(1);

  Dataset short_train;
  for (int i = 0; i < 4; ++i) short_train.push_back(make_instance(Vector::Ones(12), i % 2, "c", "h"));
  CHECK_THROWS_AS(fit_rise(short_train), ValidationError);
}

TEST_CASE("SFA coefficients are DFT slots of the normalized window") {
  Rng rng(8);
  BossParams p;
  p.window_len = 16;
  p.word_len = 6;
  for (bool normalize : {true, false}) {
    p.normalize_windows = normalize;
    const Vector w = fixture::random_vector(16, rng);
    Vector z = w;
    if (normalize) {
      const double mean = w.mean();
      z = (w.array() - mean) / std::sqrt((w.array() - mean).square().mean());
    }
    const auto dft = oracle::naive_dft(z);
    const Vector c = sfa_coefficients(w, p);
    const Index first = normalize ? 1 : 0;
    for (Index s = 0; s < p.word_len; ++s) {
      const auto x = dft[std::size_t(first + s / 2)];
      CHECK(c[s] == doctest::Approx(s % 2 ? x.imag() : x.real()).epsilon(1e-9).scale(1e-9));
    }
  }
}

TEST_CASE("MCB edges are the sort-oracle quantiles; words use the alphabet") {
  Rng rng(9);
  Dataset data;
  for (int i = 0; i < 6; ++i) data.push_back(make_instance(fixture::random_vector(40, rng).cwiseAbs(), i % 2, "c", "h"));
  for (int alphabet : {2, 4}) {
    BossParams p;
    p.alphabet = alphabet;
    const auto bins = train_mcb(data, p);
    REQUIRE(bins.edges.size() == std::size_t(p.word_len));
    for (Index s = 0; s < p.word_len; ++s) {
      std::vector<double> col;
      for (const auto& d : data)
        for (Index t = 0; t + p.window_len <= 40; ++t) col.push_back(sfa_coefficients(d.values.segment(t, p.window_len), p)[s]);
      std::sort(col.begin(), col.end());
      for (int b = 1; b < alphabet; ++b)
        CHECK(bins.edges[std::size_t(s)][std::size_t(b - 1)] == col[col.size() * std::size_t(b) / std::size_t(alphabet)]);
    }
    const Vector window = data[0].values.head(p.window_len);
    const Word w = sfa_word(window, bins);
    CHECK(w == sfa_word(window, bins));
    for (int sym : word_symbols(w, p)) {
      CHECK(sym >= 0);
      CHECK(sym < alphabet);
    }
  }
  CHECK_THROWS_AS(sfa_word(Vector(Vector::Zero(10)), SfaBins{}), ValidationError);
}

TEST_CASE("BOSS histograms match a brute-force recount") {
  Rng rng(10);
  Dataset data;
  for (int i = 0; i < 4; ++i) data.push_back(make_instance(fixture::random_vector(60, rng).cwiseAbs(), i % 2, "c", "h"));
  for (bool reduce : {true, false}) {
    BossParams p;
    p.numerosity_reduction = reduce;
    const auto bins = train_mcb(data, p);
    for (const auto& d : data) {
      std::map<Word, std::uint32_t> expected;
      std::optional<Word> prev;
      for (Index t = 0; t + p.window_len <= d.values.size(); ++t) {
        const Word w = sfa_word(d.values.segment(t, p.window_len), bins);
        if (!(reduce && prev == w)) ++expected[w];
        prev = w;
      }
      const auto h = boss_transform(d.values, bins);
      CHECK(h.distinct() == expected.size());
      for (const auto& [w, c] : expected) CHECK(h.count(w) == c);
      if (!reduce) CHECK(h.total() == std::uint64_t(60 - p.window_len + 1));
    }
    const auto flat = boss_transform(Vector::Constant(60, 5.0), bins);
    if (reduce) {
      CHECK(flat.distinct() == 1);
      CHECK(flat.total() == 1);
    }
  }
  CHECK_THROWS_AS(boss_transform(Vector::Ones(5), train_mcb(data, {})), ValidationError);
}

TEST_CASE("boss_distance") {
  const WordHistogram a({{1, 2}});
  const WordHistogram b({{1, 1}, {2, 3}});
  CHECK(boss_distance(a, b) == 1.0);
  CHECK(boss_distance(b, a) == 10.0);
  CHECK(boss_distance(a, a) == 0.0);
}

TEST_CASE("BOSS params are validated") {
  BossParams p;
  CHECK_THROWS_AS(p.validate(9), ValidationError);
  p.word_len = 3;
  CHECK_THROWS_AS(p.validate(48), ValidationError);
  p.word_len = 10;
  p.alphabet = 1;
  CHECK_THROWS_AS(p.validate(48), ValidationError);
}

TEST_CASE("BOSS and ensembles on the separable case") {
  Separable s;
  const auto boss = fit_boss(s.train);
  for (const auto& d : s.train) CHECK(boss->predict(d.values) == d.label);
  CHECK(fit_boss(s.train)->predict_scores(s.test) == boss->predict_scores(s.test));
  // Window normalization blurs a short block into noise-like words; well above chance is enough.
  CHECK(test_f1(*boss, s.test) >= 0.7);

  const auto full = fit_boss_ensemble(s.train, {}, 3);
  REQUIRE(full->member_count() >= 1);
  double best = 0, best_member_f1 = 0;
  for (std::size_t m = 0; m < full->member_count(); ++m) best = std::max(best, full->member(m).accuracy);
  for (std::size_t m = 0; m < full->member_count(); ++m) {
    CHECK(full->member(m).accuracy >= 0.92 * best);
    best_member_f1 = std::max(best_member_f1, test_f1(*full->member(m).model, s.test));
  }
  CHECK(test_f1(*full, s.test) >= best_member_f1 - 0.05);

  BossEnsembleParams cp;
  cp.mode = EnsembleMode::compact;
  const auto compact = fit_boss_ensemble(s.train, cp, 3);
  CHECK(compact->member_count() <= 50);
  CHECK(compact->kind() == "cboss");
  CHECK(fit_boss_ensemble(s.train, cp, 3)->predict_scores(s.test) == compact->predict_scores(s.test));
}

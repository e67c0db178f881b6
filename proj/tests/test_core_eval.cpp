#include "adbench/classic/knn.hpp"
#include "adbench/core.hpp"
#include "adbench/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <thread>

using namespace adbench;

TEST_CASE("TimeSeries validates readings") {
  CHECK_THROWS_AS(TimeSeries(0, 0, {1.0}), ValidationError);
  CHECK_THROWS_AS(TimeSeries(0, 60, {}), ValidationError);
  CHECK_THROWS_AS(TimeSeries(0, 60, {-1.0}), ValidationError);
  CHECK_THROWS_AS(TimeSeries(0, 60, {std::numeric_limits<double>::infinity()}), ValidationError);

  const TimeSeries s(1000, 60, {1.0, std::nullopt, 0.0}, "h1");
  CHECK(s.timestamp(2) == 1120);
  CHECK(s.has_missing());
  CHECK(s.missing_count() == 1);
  CHECK_THROWS_AS(s.dense(), ValidationError);
}

TEST_CASE("make_instance rejects bad labels") {
  CHECK_THROWS_AS(make_instance(Vector::Ones(3), 2, "c", "h"), ValidationError);
  CHECK_THROWS_AS(make_instance(Vector(), 1, "c", "h"), ValidationError);
  const auto i = make_instance(Vector::Ones(3), 1, "c", "h", 60, 1800);
  CHECK(i.series().interval_s() == 1800);
  CHECK(i.series().dense() == Vector::Ones(3));
}

TEST_CASE("predict contract: length, missing values, score threshold") {
  const auto train = fixture::separable(20, 24, 3);
  const auto model = classic::fit_knn(train);
  CHECK_THROWS_AS(model->predict(Vector(Vector::Zero(23))), DimensionError);

  std::vector<Reading> with_gap(24, 100.0);
  with_gap[5] = std::nullopt;
  CHECK_THROWS_AS(model->predict(TimeSeries(0, 60, with_gap)), ValidationError);

  for (const auto& inst : train) {
    const double s = model->predict_score(inst.values);
    CHECK((s == 0.0 || s == 1.0));
    CHECK(model->predict(inst.values) == label_from_score(s));
    CHECK(model->predict(inst.series()) == inst.label);
  }
  CHECK(label_from_score(0.5) == 1);
  CHECK(label_from_score(std::nextafter(0.5, 0.0)) == 0);
}

TEST_CASE("confusion matches hand counts") {
  const std::vector<int> y{1, 1, 0, 0}, p{1, 0, 1, 0};
  CHECK(eval::confusion(y, p) == eval::Confusion{1, 1, 1, 1});
  CHECK(eval::confusion(y, y) == eval::Confusion{2, 0, 0, 2});
  const std::vector<int> zeros(5, 0), ones(5, 1);
  CHECK(eval::confusion(zeros, ones) == eval::Confusion{0, 5, 0, 0});

  CHECK_THROWS_AS(eval::confusion(std::vector<int>{1}, std::vector<int>{1, 0}), DimensionError);
  CHECK_THROWS_AS(eval::confusion(std::vector<int>{2}, std::vector<int>{1}), ValidationError);
}

TEST_CASE("F1 examples and the 0/0 convention") {
  const auto [pos, neg] = eval::f1_per_class({1, 1, 1, 1});
  CHECK(pos == 0.5);
  CHECK(neg == 0.5);

  const std::vector<int> y{1, 0}, p{1, 1};
  const auto c = eval::confusion(y, p);
  CHECK(eval::f1_per_class(c).first == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(eval::f1_per_class(c).second == 0.0);
  CHECK(eval::macro_f1(y, p) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  CHECK(eval::macro_f1(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK(eval::macro_f1(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}) == 1.0);

  const auto zero = eval::class_scores(0, 0, 0);
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);
}

TEST_CASE("macro F1 agrees with the enumeration oracle and its symmetries") {
  Rng rng(11);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> len(1, 40);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> y(std::size_t(len(rng))), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = coin(rng);
      p[i] = coin(rng);
    }
    const double m = eval::macro_f1(y, p);
    CHECK(m == doctest::Approx(oracle::macro_f1(y, p)).epsilon(1e-14));
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);

    std::vector<int> yf(y.size()), pf(p.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      yf[i] = 1 - y[i];
      pf[i] = 1 - p[i];
    }
    CHECK(eval::macro_f1(yf, pf) == doctest::Approx(m).epsilon(1e-15));

    const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
    if (both) {
      CHECK(eval::macro_f1(y, y) == 1.0);
      const double ib = double(std::count(y.begin(), y.end(), 1)) / double(y.size());
      for (int constant : {0, 1}) {
        const std::vector<int> c(y.size(), constant);
        CHECK(eval::macro_f1(y, c) < 0.5 + ib / 2);
      }
    }
  }
}

TEST_CASE("evaluate fills a consistent report") {
  const std::vector<int> y{1, 1, 1, 0, 0}, p{1, 1, 0, 0, 1};
  const auto r = eval::evaluate(y, p, 1.5, 0.25);
  CHECK(r.confusion.total() == r.n_test);
  CHECK(r.n_test == 5);
  CHECK(r.ib_ratio == doctest::Approx(0.6));
  CHECK(r.macro_f1 == doctest::Approx((r.positive.f1 + r.negative.f1) / 2));
  CHECK(r.train_time_s == 1.5);
  CHECK(r.infer_time_s == 0.25);
}

TEST_CASE("timed measures wall time") {
  const double idle = eval::timed([] {});
  CHECK(idle < 0.01);
  auto [value, secs] = eval::timed([] {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    return 7;
  });
  CHECK(value == 7);
  CHECK(secs == doctest::Approx(0.1).epsilon(0.5));
}

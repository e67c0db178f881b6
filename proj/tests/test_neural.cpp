#include "adbench/eval.hpp"
#include "adbench/neural/models.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace adbench;
using namespace adbench::neural;

namespace {

constexpr double kGradTol = 1e-6;

// Most probes must land on smooth points for the check to mean anything.
void check_grad(const oracle::GradCheck& g) {
  INFO("probes " << g.probes << ", kinks " << g.kinks << ", worst analytic " << g.worst_analytic << " numeric "
                  << g.worst_numeric);
  CHECK(g.max_rel_error < kGradTol);
  CHECK(g.probes > 0);
  CHECK(g.kinks <= g.probes);
}

Tensor3 row(std::initializer_list<double> v) {
  Tensor3 x(1, 1, Index(v.size()));
  Index t = 0;
  for (double d : v) x(0, 0, t++) = d;
  return x;
}

std::vector<int> random_labels(Index n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> y(std::size_t(n), 0);
  for (auto& v : y) v = coin(rng);
  y[0] = 0;
  y[1] = 1;
  return y;
}

Dataset noise_dataset(std::size_t n, Index length, std::uint64_t seed) {
  auto rng = stream_rng(seed, "noise");
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = fixture::random_vector(length, rng).array().abs() * 100.0;
    out.push_back(make_instance(std::move(v), int(i % 2), "noise", "h" + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST_CASE("conv1d hand examples") {
  Rng rng(1);
  Conv1d diff(1, 1, 3, false, rng);
  diff.weight().value << 1, 0, -1;
  const Tensor3 y = diff.infer(row({1, 2, 3}));
  CHECK(y(0, 0, 0) == -2.0);
  CHECK(y(0, 0, 1) == -2.0);
  CHECK(y(0, 0, 2) == 2.0);

  Conv1d ident(1, 1, 3, false, rng);
  ident.weight().value << 0, 1, 0;
  const Tensor3 x = oracle::random_tensor(2, 1, 9, rng);
  CHECK(ident.infer(x).flat() == x.flat());

  CHECK_THROWS_AS(diff.infer(Tensor3(1, 2, 3)), DimensionError);
}

TEST_CASE("conv1d matches the direct convolution oracle") {
  Rng rng(2);
  for (Index k : {1, 2, 3, 8, 10}) {
    for (bool bias : {false, true}) {
      Conv1d conv(3, 4, k, bias, rng);
      if (bias) conv.bias().value = fixture::random_vector(4, rng);
      const Tensor3 x = oracle::random_tensor(2, 3, 11, rng);
      const Tensor3 y = conv.infer(x);
      const Index pad = (k - 1) / 2;
      for (Index b = 0; b < 2; ++b)
        for (Index o = 0; o < 4; ++o) {
          Vector acc = Vector::Constant(11, bias ? conv.bias().value(o) : 0.0);
          for (Index c = 0; c < 3; ++c) {
            // Even kernels pad one more on the right: append that zero explicitly.
            Vector xs = Vector::Zero(11 + (k - 1) % 2);
            xs.head(11) = x.sample(b).row(c).transpose();
            const Vector w = conv.weight().value.row(o).segment(c * k, k).transpose();
            const Vector out = oracle::naive_conv(xs, w, 0.0, 1, pad);
            for (Index t = 0; t < 11; ++t) acc[t] += out[t];
          }
          for (Index t = 0; t < 11; ++t) CHECK(std::abs(y(b, o, t) - acc[t]) <= 1e-12);
        }
    }
  }
}

TEST_CASE("layer gradients agree with central differences") {
  Rng rng(3);
  SUBCASE("conv1d") {
    for (Index k : {1, 4, 5})
      for (bool bias : {false, true}) {
        Conv1d conv(2, 3, k, bias, rng);
        const auto g = oracle::check_module(conv, oracle::random_tensor(3, 2, 12, rng), 10, rng);
        check_grad(g);
      }
  }
  SUBCASE("batch norm") {
    BatchNorm1d bn(3);
    bn.gamma().value = fixture::random_vector(3, rng);
    bn.beta().value = fixture::random_vector(3, rng);
    check_grad(oracle::check_module(bn, oracle::random_tensor(4, 3, 7, rng), 3, rng));
  }
  SUBCASE("relu and max pool") {
    ReLU relu;
    check_grad(oracle::check_module(relu, oracle::random_tensor(2, 2, 10, rng), 20, rng));
    MaxPool1d pool;
    check_grad(oracle::check_module(pool, oracle::random_tensor(2, 2, 10, rng), 20, rng));
  }
  SUBCASE("conv block") {
    auto block = conv_block(2, 4, 5, rng);
    check_grad(oracle::check_module(*block, oracle::random_tensor(3, 2, 10, rng), 5, rng));
  }
  SUBCASE("residual blocks") {
    auto projected = resnet_block(2, 4, rng);
    CHECK_FALSE(projected->identity_shortcut());
    check_grad(oracle::check_module(*projected, oracle::random_tensor(3, 2, 10, rng), 4, rng));
    auto identity = resnet_block(3, 3, rng);
    CHECK(identity->identity_shortcut());
    check_grad(oracle::check_module(*identity, oracle::random_tensor(3, 3, 10, rng), 4, rng));
  }
  SUBCASE("inception modules") {
    InceptionModule first(1, rng);
    CHECK_FALSE(first.has_bottleneck());
    check_grad(oracle::check_module(first, oracle::random_tensor(2, 1, 12, rng), 3, rng));
    InceptionModule deep(4, rng);
    CHECK(deep.has_bottleneck());
    check_grad(oracle::check_module(deep, oracle::random_tensor(2, 4, 12, rng), 3, rng));
  }
}

TEST_CASE("global average pooling and the linear head") {
  Tensor3 x(1, 2, 4);
  for (Index t = 0; t < 4; ++t) {
    x(0, 0, t) = 3.0;
    x(0, 1, t) = double(t);
  }
  const Matrix g = gap(x);
  CHECK(g(0, 0) == 3.0);
  CHECK(g(0, 1) == 1.5);
  const Tensor3 back = gap_backward(Matrix::Constant(1, 2, 1.0), 4);
  CHECK((back.flat().array() == 0.25).all());

  Rng rng(4);
  Linear lin(3, 2, rng);
  const Matrix in = Matrix::Random(5, 3);
  const Matrix r = Matrix::Random(5, 2);
  lin.weight().grad.setZero();
  lin.bias().grad.setZero();
  (void)lin.forward(in);
  const Matrix din = lin.backward(r);
  std::vector<Param*> params;
  lin.collect(params);
  const auto loss = [&] { return (lin.infer(in).array() * r.array()).sum(); };
  check_grad(oracle::check_params(params, loss, 6, rng));
  // Input gradient by the same differences on a mutable copy.
  Matrix probe = in;
  for (Index i = 0; i < probe.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + 1e-5;
    const double up = (lin.infer(probe).array() * r.array()).sum();
    probe.data()[i] = saved - 1e-5;
    const double down = (lin.infer(probe).array() * r.array()).sum();
    probe.data()[i] = saved;
    CHECK(oracle::rel_error(din.data()[i], (up - down) / 2e-5) < kGradTol);
  }
}

TEST_CASE("softmax cross-entropy") {
  const std::vector<int> y1{1};
  CHECK(softmax_ce(Matrix::Zero(1, 2), y1).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Matrix confident(1, 2);
  confident << 0, 20;
  CHECK(softmax_ce(confident, y1).loss < 1e-8);
  Matrix huge(1, 2);
  huge << 1000, -1000;
  CHECK(std::isfinite(softmax_ce(huge, y1).loss));
  CHECK(softmax_ce(huge, y1).loss == doctest::Approx(2000.0));

  Rng rng(5);
  Matrix logits = Matrix::Random(6, 2) * 3.0;
  const std::vector<int> y{0, 1, 1, 0, 1, 0};
  const Matrix grad = softmax_ce(logits, y).grad;
  for (Index i = 0; i < logits.size(); ++i) {
    const double saved = logits.data()[i];
    logits.data()[i] = saved + 1e-6;
    const double up = softmax_ce(logits, y).loss;
    logits.data()[i] = saved - 1e-6;
    const double down = softmax_ce(logits, y).loss;
    logits.data()[i] = saved;
    CHECK(oracle::rel_error(grad.data()[i], (up - down) / 2e-6) < kGradTol);
  }
  CHECK((softmax(logits).rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(softmax_ce(Matrix::Zero(1, 2), std::vector<int>{2}), ValidationError);
  Matrix bad = Matrix::Zero(1, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(softmax_ce(bad, y1), ValidationError);
}

TEST_CASE("full networks backpropagate exactly") {
  Rng rng(6);
  const Tensor3 x = oracle::random_tensor(3, 1, 16, rng);
  const auto y = random_labels(3, rng);
  SUBCASE("convnet") {
    auto net = build_convnet(16, rng);
    check_grad(oracle::check_network(*net, x, y, 3, rng));
  }
  SUBCASE("resnet") {
    auto net = build_resnet(16, rng);
    check_grad(oracle::check_network(*net, x, y, 2, rng));
  }
  SUBCASE("inception member") {
    const Tensor3 xl = oracle::random_tensor(2, 1, 40, rng);
    auto net = build_inception_network(40, rng);
    check_grad(oracle::check_network(*net, xl, std::vector<int>{0, 1}, 2, rng));
  }
}

TEST_CASE("batch normalization statistics") {
  BatchNorm1d bn(1);
  // Zero mean, unit (population) variance: the output is x / sqrt(1 + eps).
  const Tensor3 x = row({1, -1, 1, -1});
  Tensor3 two(2, 1, 4);
  two.flat() << x.flat(), x.flat();
  const Tensor3 y = bn.forward(two);
  const double scale = 1.0 / std::sqrt(1.0 + BatchNorm1d::kEps);
  for (Index i = 0; i < y.size(); ++i) {
    CHECK(std::abs(y.flat()[i] - two.flat()[i] * scale) <= 1e-12);
    CHECK(std::abs(y.flat()[i] - two.flat()[i]) < 1e-5);
  }

  Rng rng(7);
  BatchNorm1d bn3(3);
  bn3.gamma().value << 2.0, 0.5, 1.0;
  bn3.beta().value << -1.0, 3.0, 0.0;
  Tensor3 big = oracle::random_tensor(8, 3, 50, rng);
  big.flat() = big.flat() * 7.0 + Vector::Constant(big.size(), 40.0);
  const Tensor3 out = bn3.forward(big);
  for (Index c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (Index b = 0; b < 8; ++b)
      for (Index t = 0; t < 50; ++t) sum += out(b, c, t);
    const double mean = sum / 400;
    for (Index b = 0; b < 8; ++b)
      for (Index t = 0; t < 50; ++t) sq += (out(b, c, t) - mean) * (out(b, c, t) - mean);
    CHECK(mean == doctest::Approx(bn3.beta().value(c)).epsilon(1e-9));
    CHECK(std::sqrt(sq / 400) == doctest::Approx(bn3.gamma().value(c)).epsilon(1e-4));
  }
  // Running statistics move toward the batch statistics; evaluation is pure.
  CHECK(bn3.running_mean()[0] == doctest::Approx(0.1 * 40).epsilon(0.05));
  const Tensor3 e1 = bn3.infer(big);
  const Vector mean_before = bn3.running_mean();
  const Tensor3 e2 = bn3.infer(big);
  CHECK(e1.flat() == e2.flat());
  CHECK(bn3.running_mean() == mean_before);
  CHECK((bn3.running_var().array() >= 0).all());

  CHECK_THROWS_AS(bn.forward(row({1, 2, 3})), ValidationError);
  CHECK_NOTHROW(bn.infer(row({1, 2, 3})));
}

TEST_CASE("residual block with silent main path passes the input through relu") {
  Rng rng(8);
  auto block = resnet_block(3, 3, rng);
  std::vector<Param*> params;
  std::vector<Vector*> buffers;
  block->collect(params, buffers);
  for (Param* p : params)
    if (p->value.cols() > 1) p->value.setZero();  // conv weights only
  Tensor3 x = oracle::random_tensor(2, 3, 12, rng);
  const Tensor3 y = block->forward(x);
  CHECK(y.flat() == x.flat().cwiseMax(0.0));
  x.flat() = x.flat().cwiseAbs();
  CHECK(block->infer(x).flat() == x.flat());
}

TEST_CASE("architectures: shapes, members and minimum lengths") {
  Rng rng(9);
  const Tensor3 x = oracle::random_tensor(3, 1, 40, rng);
  CHECK(build_convnet(40, rng)->infer(x).rows() == 3);
  CHECK(build_convnet(40, rng)->infer(x).cols() == 2);
  CHECK(build_resnet(40, rng)->infer(x).cols() == 2);
  CHECK(build_inception_network(40, rng)->infer(x).cols() == 2);
  CHECK(build_members(Architecture::inceptiontime, 40, 1).size() == kInceptionMembers);
  CHECK(build_members(Architecture::convnet, 40, 1).size() == 1);
  CHECK_THROWS_AS(build_members(Architecture::inceptiontime, 39, 1), ValidationError);
  CHECK_THROWS_AS(build_members(Architecture::convnet, 7, 1), ValidationError);
  CHECK(parse_architecture("resnet") == Architecture::resnet);
  CHECK_THROWS_AS(parse_architecture("lstm"), ValidationError);
}

TEST_CASE("batching and normalization helpers") {
  std::vector<std::size_t> order(9);
  std::iota(order.begin(), order.end(), 0);
  const auto b = make_batches(order, 4);
  REQUIRE(b.size() == 2);
  CHECK(b[0].size() == 4);
  CHECK(b[1].size() == 5);
  CHECK(make_batches(order, 3).size() == 3);
  CHECK(make_batches({0, 1, 2}, 8).size() == 1);
  CHECK_THROWS_AS(make_batches(order, 1), ValidationError);

  CHECK(znormalize(Vector::Constant(5, 42.0)).isZero());
  Rng rng(10);
  const Vector z = znormalize(fixture::random_vector(100, rng) * 9.0);
  CHECK(std::abs(z.mean()) < 1e-12);
  CHECK(std::sqrt(z.array().square().mean()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training: memorization, determinism and best-epoch restore") {
  const Dataset train = noise_dataset(16, 24, 1);
  TrainParams p;
  p.batch_size = 8;
  p.max_epochs = 200;
  p.patience = 200;

  auto model = fit_neural(Architecture::convnet, train, train, 3, p);
  const auto& log = model->logs().at(0);
  CHECK(log.best_val_f1 == 1.0);
  int correct = 0;
  for (const auto& inst : train) correct += model->predict(inst.values) == inst.label;
  CHECK(correct == 16);

  auto again = fit_neural(Architecture::convnet, train, train, 3, p);
  CHECK(again->logs().at(0).train_loss == log.train_loss);

  // Restore: the returned model scores the best validation F1, never worse than the last epoch.
  const Dataset val = noise_dataset(10, 24, 2);
  TrainParams short_run = p;
  short_run.max_epochs = 15;
  short_run.stop_when_perfect = false;
  auto restored = fit_neural(Architecture::convnet, train, val, 4, short_run);
  const auto& rl = restored->logs().at(0);
  CHECK(rl.best_val_f1 >= rl.val_f1.back());
  std::vector<int> y, pred;
  for (const auto& inst : val) {
    y.push_back(inst.label);
    pred.push_back(restored->predict(inst.values));
  }
  CHECK(eval::macro_f1(y, pred) == doctest::Approx(rl.best_val_f1).epsilon(1e-12));
}

TEST_CASE("full-batch training loss decreases at a small learning rate") {
  TrainParams p;
  p.lr = 1e-4;
  p.batch_size = 64;
  p.max_epochs = 5;
  p.patience = 100;
  p.stop_when_perfect = false;
  int monotone = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset train = fixture::separable(12, 16, seed);
    auto model = fit_neural(Architecture::convnet, train, train, seed, p);
    const auto& loss = model->logs().at(0).train_loss;
    REQUIRE(loss.size() == 5);
    monotone += std::is_sorted(loss.rbegin(), loss.rend()) && loss.front() > loss.back();
  }
  CHECK(monotone >= 4);
}

TEST_CASE("neural checkpoints round-trip") {
  const Dataset train = fixture::separable(12, 40, 11);
  TrainParams p;
  p.max_epochs = 2;
  auto model = fit_neural(Architecture::inceptiontime, train, train, 5, p);
  CHECK(model->member_count() == 5);
  std::stringstream buf;
  model->save(buf);
  const auto back = NeuralClassifier::load(buf);
  CHECK(back->architecture() == Architecture::inceptiontime);
  CHECK(back->series_length() == 40);
  for (const auto& inst : train) CHECK(back->predict_score(inst.values) == model->predict_score(inst.values));

  std::stringstream junk("ADBNNET1garbage");
  CHECK_THROWS_AS(NeuralClassifier::load(junk), ValidationError);
}

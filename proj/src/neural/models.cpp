#include "adbench/neural/models.hpp"

#include "adbench/binary_io.hpp"
#include "adbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adbench::neural {

Architecture parse_architecture(std::string_view s) {
  if (s == "convnet") return Architecture::convnet;
  if (s == "resnet") return Architecture::resnet;
  if (s == "inceptiontime") return Architecture::inceptiontime;
  throw ValidationError("unknown architecture: " + std::string(s));
}

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::convnet: return "convnet";
    case Architecture::resnet: return "resnet";
    case Architecture::inceptiontime: return "inceptiontime";
  }
  return "?";
}

Index min_series_length(Architecture a) { return a == Architecture::inceptiontime ? 40 : 8; }

// --- Network ------------------------------------------------------------------------

Network::Network(std::unique_ptr<Module> body, Index features, Rng& rng)
    : body_(std::move(body)), head_(features, 2, rng) {}

Matrix Network::forward(const Tensor3& x) {
  const Tensor3 h = body_->forward(x);
  time_ = h.time();
  return head_.forward(gap(h));
}

Matrix Network::infer(const Tensor3& x) const { return head_.infer(gap(body_->infer(x))); }

void Network::backward(const Matrix& dlogits) { body_->backward(gap_backward(head_.backward(dlogits), time_)); }

std::vector<Param*> Network::params() {
  std::vector<Param*> p;
  std::vector<Vector*> b;
  body_->collect(p, b);
  head_.collect(p);
  return p;
}

std::vector<Vector*> Network::buffers() {
  std::vector<Param*> p;
  std::vector<Vector*> b;
  body_->collect(p, b);
  return b;
}

void Network::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

// --- builders -----------------------------------------------------------------------

std::unique_ptr<Sequential> conv_block(Index in, Index out, Index kernel, Rng& rng) {
  auto s = std::make_unique<Sequential>();
  s->emplace<Conv1d>(in, out, kernel, false, rng);
  s->emplace<BatchNorm1d>(out);
  s->emplace<ReLU>();
  return s;
}

std::unique_ptr<Residual> resnet_block(Index in, Index out, Rng& rng) {
  auto main = std::make_unique<Sequential>();
  main->add(conv_block(in, out, 8, rng));
  main->add(conv_block(out, out, 5, rng));
  main->emplace<Conv1d>(out, out, 3, false, rng);
  main->emplace<BatchNorm1d>(out);
  std::unique_ptr<Sequential> shortcut;
  if (in != out) {
    shortcut = std::make_unique<Sequential>();
    shortcut->emplace<Conv1d>(in, out, 1, false, rng);
    shortcut->emplace<BatchNorm1d>(out);
  }
  return std::make_unique<Residual>(std::move(main), std::move(shortcut));
}

namespace {

void check_length(Architecture a, Index t) {
  if (t < min_series_length(a))
    throw ValidationError(to_string(a) + ": series length " + std::to_string(t) + " below minimum " +
                          std::to_string(min_series_length(a)));
}

}  // namespace

std::unique_ptr<Network> build_convnet(Index series_length, Rng& rng) {
  check_length(Architecture::convnet, series_length);
  auto body = std::make_unique<Sequential>();
  body->add(conv_block(1, 128, 8, rng));
  body->add(conv_block(128, 256, 5, rng));
  body->add(conv_block(256, 128, 3, rng));
  return std::make_unique<Network>(std::move(body), 128, rng);
}

std::unique_ptr<Network> build_resnet(Index series_length, Rng& rng) {
  check_length(Architecture::resnet, series_length);
  auto body = std::make_unique<Sequential>();
  body->add(resnet_block(1, 64, rng));
  body->add(resnet_block(64, 128, rng));
  body->add(resnet_block(128, 128, rng));
  return std::make_unique<Network>(std::move(body), 128, rng);
}

std::unique_ptr<Network> build_inception_network(Index series_length, Rng& rng) {
  check_length(Architecture::inceptiontime, series_length);
  auto body = std::make_unique<Sequential>();
  Index in = 1;
  for (int m = 0; m < 3; ++m) {
    auto module = std::make_unique<InceptionModule>(in, rng);
    std::unique_ptr<Sequential> shortcut;
    if (in != InceptionModule::out_channels()) {
      shortcut = std::make_unique<Sequential>();
      shortcut->emplace<Conv1d>(in, InceptionModule::out_channels(), 1, false, rng);
      shortcut->emplace<BatchNorm1d>(InceptionModule::out_channels());
    }
    body->emplace<Residual>(std::move(module), std::move(shortcut));
    in = InceptionModule::out_channels();
  }
  return std::make_unique<Network>(std::move(body), in, rng);
}

std::vector<std::unique_ptr<Network>> build_members(Architecture a, Index series_length, std::uint64_t seed) {
  std::vector<std::unique_ptr<Network>> out;
  const int n = a == Architecture::inceptiontime ? kInceptionMembers : 1;
  for (int i = 0; i < n; ++i) {
    auto rng = stream_rng(seed, "init/" + std::to_string(i));
    switch (a) {
      case Architecture::convnet: out.push_back(build_convnet(series_length, rng)); break;
      case Architecture::resnet: out.push_back(build_resnet(series_length, rng)); break;
      case Architecture::inceptiontime: out.push_back(build_inception_network(series_length, rng)); break;
    }
  }
  return out;
}

// --- data -----------------------------------------------------------------------------

Vector znormalize(const Vector& x) {
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return Vector::Zero(x.size());
  return (x.array() - mean) / sd;
}

Tensor3 to_tensor(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ValidationError("to_tensor: no rows");
  const Index t = Index(data[rows.front()].size());
  Tensor3 x(Index(rows.size()), 1, t);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = data[rows[i]].values;
    if (v.size() != t) throw DimensionError("to_tensor: series differ in length");
    x.sample(Index(i)).row(0) = znormalize(v).transpose();
  }
  return x;
}

Tensor3 to_tensor(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return to_tensor(data, rows);
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t batch_size) {
  if (batch_size < 2) throw ValidationError("batch size must be >= 2");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    out.emplace_back(order.begin() + long(i), order.begin() + long(std::min(order.size(), i + batch_size)));
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

namespace {

constexpr std::size_t kInferChunk = 64;

// Positive-class probability of each row, averaged over networks.
std::vector<double> ensemble_scores(const std::vector<const Network*>& nets, const Dataset& data) {
  std::vector<double> out(data.size(), 0.0);
  for (std::size_t lo = 0; lo < data.size(); lo += kInferChunk) {
    std::vector<std::size_t> rows(std::min(kInferChunk, data.size() - lo));
    std::iota(rows.begin(), rows.end(), lo);
    const Tensor3 x = to_tensor(data, rows);
    for (const Network* n : nets) {
      const Matrix p = softmax(n->infer(x));
      for (std::size_t i = 0; i < rows.size(); ++i) out[lo + i] += p(Index(i), 1);
    }
  }
  for (double& s : out) s /= double(nets.size());
  return out;
}

struct Snapshot {
  std::vector<Matrix> params;
  std::vector<Vector> buffers;
};

Snapshot snapshot(Network& net) {
  Snapshot s;
  for (Param* p : net.params()) s.params.push_back(p->value);
  for (Vector* b : net.buffers()) s.buffers.push_back(*b);
  return s;
}

void restore(Network& net, const Snapshot& s) {
  auto params = net.params();
  auto buffers = net.buffers();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s.params[i];
  for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i] = s.buffers[i];
}

}  // namespace

TrainLog train_network(Network& net, const Dataset& train, const Dataset& validation, const TrainParams& params,
                       std::uint64_t seed) {
  if (validation.empty()) throw ValidationError("train: empty validation set");
  if (train.size() < 2) throw ValidationError("train: need >= 2 training instances");
  if (params.max_epochs < 1 || params.patience < 1) throw ValidationError("train: epochs and patience must be >= 1");

  const auto net_params = net.params();
  std::vector<Matrix> m1, m2;
  for (Param* p : net_params) {
    m1.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    m2.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  const auto val_labels = labels_of(validation);
  auto rng = stream_rng(seed, "batches");
  TrainLog log;
  Snapshot best = snapshot(net);
  long step = 0;

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    const auto batches = make_batches(std::move(order), std::size_t(params.batch_size));
    for (const auto& batch : batches) {
      const Tensor3 x = to_tensor(train, batch);
      std::vector<int> y;
      for (std::size_t i : batch) y.push_back(train[i].label);
      net.zero_grad();
      const auto lg = softmax_ce(net.forward(x), y);
      net.backward(lg.grad);
      loss_sum += lg.loss;

      ++step;
      const double c1 = 1.0 - std::pow(params.beta1, double(step));
      const double c2 = 1.0 - std::pow(params.beta2, double(step));
      for (std::size_t i = 0; i < net_params.size(); ++i) {
        Param& p = *net_params[i];
        m1[i] = params.beta1 * m1[i] + (1 - params.beta1) * p.grad;
        m2[i] = params.beta2 * m2[i] + (1 - params.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= params.lr * (m1[i].array() / c1) / ((m2[i].array() / c2).sqrt() + params.eps);
      }
    }
    log.train_loss.push_back(loss_sum / double(batches.size()));

    const auto scores = ensemble_scores({&net}, validation);
    std::vector<int> pred;
    for (double s : scores) pred.push_back(label_from_score(s));
    const double f1 = eval::macro_f1(val_labels, pred);
    log.val_f1.push_back(f1);
    if (f1 > log.best_val_f1) {
      log.best_val_f1 = f1;
      log.best_epoch = epoch;
      best = snapshot(net);
    }
    if (epoch - log.best_epoch >= params.patience) break;
    if (params.stop_when_perfect && log.best_val_f1 >= 1.0) break;
  }
  restore(net, best);
  return log;
}

// --- classifier -----------------------------------------------------------------------

NeuralClassifier::NeuralClassifier(Architecture arch, std::vector<std::unique_ptr<Network>> members,
                                   std::size_t length, std::uint64_t seed, std::vector<TrainLog> logs)
    : FittedClassifier(seed), arch_(arch), members_(std::move(members)), length_(length), logs_(std::move(logs)) {
  if (members_.empty()) throw ValidationError("neural classifier: no networks");
}

double NeuralClassifier::score_one(const Vector& values) const {
  Dataset one{LabeledInstance{values, 0, {}, {}, 0, 60}};
  return score_many(one).front();
}

std::vector<double> NeuralClassifier::score_many(const Dataset& data) const {
  std::vector<const Network*> nets;
  for (const auto& m : members_) nets.push_back(m.get());
  return ensemble_scores(nets, data);
}

std::unique_ptr<NeuralClassifier> fit_neural(Architecture arch, const Dataset& train, const Dataset& validation,
                                             std::uint64_t seed, const TrainParams& params) {
  if (train.empty()) throw ValidationError(to_string(arch) + ": empty training set");
  const auto length = train.front().size();
  for (const auto* set : {&train, &validation})
    for (const auto& d : *set)
      if (d.size() != length) throw DimensionError(to_string(arch) + ": series differ in length");
  auto members = build_members(arch, Index(length), seed);
  std::vector<TrainLog> logs;
  for (std::size_t i = 0; i < members.size(); ++i)
    logs.push_back(train_network(*members[i], train, validation, params, mix64(seed + i)));
  return std::make_unique<NeuralClassifier>(arch, std::move(members), length, seed, std::move(logs));
}

// --- checkpoints ----------------------------------------------------------------------

namespace {
constexpr std::string_view kMagic = "ADBNNET1";
}

void NeuralClassifier::save(std::ostream& out) const {
  write_magic(out, kMagic);
  write_pod<std::uint32_t>(out, std::uint32_t(arch_));
  write_pod<std::uint64_t>(out, length_);
  write_pod<std::uint64_t>(out, fit_seed());
  write_pod<std::uint32_t>(out, std::uint32_t(members_.size()));
  for (const auto& m : members_) {
    const auto params = m->params();
    write_pod<std::uint64_t>(out, params.size());
    for (const Param* p : params) {
      write_pod<std::uint64_t>(out, std::uint64_t(p->value.rows()));
      write_pod<std::uint64_t>(out, std::uint64_t(p->value.cols()));
      write_vector(out, p->value.reshaped());
    }
    const auto buffers = m->buffers();
    write_pod<std::uint64_t>(out, buffers.size());
    for (const Vector* b : buffers) {
      write_pod<std::uint64_t>(out, std::uint64_t(b->size()));
      write_vector(out, *b);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

std::unique_ptr<NeuralClassifier> NeuralClassifier::load(std::istream& in) {
  expect_magic(in, kMagic);
  const auto arch_raw = read_pod<std::uint32_t>(in);
  if (arch_raw > 2) throw ValidationError("checkpoint: unknown architecture");
  const auto arch = Architecture(arch_raw);
  const auto length = read_pod<std::uint64_t>(in);
  const auto seed = read_pod<std::uint64_t>(in);
  const auto n = read_pod<std::uint32_t>(in);
  auto members = build_members(arch, Index(length), seed);
  if (n != members.size()) throw ValidationError("checkpoint: member count mismatch");
  for (auto& m : members) {
    auto params = m->params();
    if (read_pod<std::uint64_t>(in) != params.size()) throw ValidationError("checkpoint: parameter count mismatch");
    for (Param* p : params) {
      const auto rows = Index(read_pod<std::uint64_t>(in));
      const auto cols = Index(read_pod<std::uint64_t>(in));
      if (rows != p->value.rows() || cols != p->value.cols()) throw ValidationError("checkpoint: parameter shape mismatch");
      p->value = read_vector(in, rows * cols).reshaped(rows, cols);
    }
    auto buffers = m->buffers();
    if (read_pod<std::uint64_t>(in) != buffers.size()) throw ValidationError("checkpoint: buffer count mismatch");
    for (Vector* b : buffers) {
      const auto size = Index(read_pod<std::uint64_t>(in));
      if (size != b->size()) throw ValidationError("checkpoint: buffer shape mismatch");
      *b = read_vector(in, size);
    }
  }
  return std::make_unique<NeuralClassifier>(arch, std::move(members), std::size_t(length), seed);
}

}  // namespace adbench::neural

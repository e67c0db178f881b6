#pragma once

#include "adbench/neural/layers.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace adbench::neural {

enum class Architecture { convnet, resnet, inceptiontime };
Architecture parse_architecture(std::string_view s);
std::string to_string(Architecture a);

/// Minimum input length per architecture (largest kernel).
Index min_series_length(Architecture a);

/// Feature extractor + global average pooling + linear head producing 2 logits.
class Network {
 public:
  Network(std::unique_ptr<Module> body, Index features, Rng& rng);

  Matrix forward(const Tensor3& x);
  Matrix infer(const Tensor3& x) const;
  /// Backpropagates d(loss)/d(logits); parameter gradients accumulate.
  void backward(const Matrix& dlogits);

  std::vector<Param*> params();
  std::vector<Vector*> buffers();
  void zero_grad();
  Module& body() noexcept { return *body_; }

 private:
  std::unique_ptr<Module> body_;
  Linear head_;
  Index time_ = 0;
};

/// conv (no bias) + batch norm + ReLU.
std::unique_ptr<Sequential> conv_block(Index in, Index out, Index kernel, Rng& rng);

/// Three conv layers (kernels 8, 5, 3), the last without ReLU, plus a shortcut that is
/// a 1x1 conv + batch norm when the channel count changes.
std::unique_ptr<Residual> resnet_block(Index in, Index out, Rng& rng);

std::unique_ptr<Network> build_convnet(Index series_length, Rng& rng);
std::unique_ptr<Network> build_resnet(Index series_length, Rng& rng);
/// One InceptionTime member: three modules, each wrapped in a residual shortcut.
std::unique_ptr<Network> build_inception_network(Index series_length, Rng& rng);

inline constexpr int kInceptionMembers = 5;

/// Networks making up a model of the given architecture (5 for InceptionTime).
std::vector<std::unique_ptr<Network>> build_members(Architecture a, Index series_length, std::uint64_t seed);

/// Per-series z-normalization; zero-variance series become all zeros.
Vector znormalize(const Vector& x);
Tensor3 to_tensor(const Dataset& data, std::span<const std::size_t> rows);
Tensor3 to_tensor(const Dataset& data);

struct TrainParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  /// Stop once validation Macro F1 reaches 1.0; the restored model is unchanged by this.
  bool stop_when_perfect = true;
};

struct TrainLog {
  std::vector<double> train_loss;  // mean batch loss per epoch
  std::vector<double> val_f1;
  int best_epoch = -1;
  double best_val_f1 = -1;
};

/// Adam on softmax cross-entropy with early stopping on validation Macro F1 and
/// best-epoch restore.
TrainLog train_network(Network& net, const Dataset& train, const Dataset& validation, const TrainParams& params,
                       std::uint64_t seed);

/// Contiguous batches of a permutation; a trailing batch of one is merged into the
/// previous batch so batch normalization always sees >= 2 samples.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t batch_size);

class NeuralClassifier final : public FittedClassifier {
 public:
  NeuralClassifier(Architecture arch, std::vector<std::unique_ptr<Network>> members, std::size_t length,
                   std::uint64_t seed, std::vector<TrainLog> logs = {});

  std::string kind() const override { return to_string(arch_); }
  std::size_t series_length() const override { return length_; }
  Architecture architecture() const noexcept { return arch_; }
  std::size_t member_count() const noexcept { return members_.size(); }
  Network& member(std::size_t i) { return *members_.at(i); }
  const std::vector<TrainLog>& logs() const noexcept { return logs_; }

  void save(std::ostream& out) const;
  static std::unique_ptr<NeuralClassifier> load(std::istream& in);

 protected:
  double score_one(const Vector& values) const override;
  std::vector<double> score_many(const Dataset& data) const override;

 private:
  Architecture arch_;
  std::vector<std::unique_ptr<Network>> members_;
  std::size_t length_;
  std::vector<TrainLog> logs_;
};

std::unique_ptr<NeuralClassifier> fit_neural(Architecture arch, const Dataset& train, const Dataset& validation,
                                             std::uint64_t seed = 1, const TrainParams& params = {});

}  // namespace adbench::neural

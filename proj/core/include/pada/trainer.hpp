#pragma once

// Desk-scale feed-forward network with manual backprop and plain SGD.
//
// Tensor layout for a model with L hidden layers:
//   encoder.0.weight [h0, in], encoder.0.bias [h0], ...,
//   encoder.{L-1}.weight, encoder.{L-1}.bias,
//   head.weight [out, h_{L-1}], head.bias [out]
// The encoder ("body") is what pre-training produces and what masks move
// between models; the head is swapped per task.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pada/param_store.hpp"
#include "pada/random.hpp"

namespace pada {

enum class Activation { tanh, relu };
enum class HeadKind { reconstruction, classification };
enum class LossKind { mse_reconstruction, cross_entropy };

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(LossKind k) noexcept;
Activation activation_from_string(std::string_view name);

inline constexpr std::string_view kHeadPrefix = "head.";

struct ModelArch {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;
  Activation activation = Activation::tanh;
  HeadKind head = HeadKind::classification;

  /// Throws Error(config): needs at least one hidden layer and positive widths.
  void validate() const;

  ModelArch with_classification_head(std::size_t classes) const;
  /// Head that maps back to `input_dim`.
  ModelArch with_reconstruction_head() const;

  LossKind natural_loss() const noexcept {
    return head == HeadKind::classification ? LossKind::cross_entropy
                                            : LossKind::mse_reconstruction;
  }
};

std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

/// Gaussian init, std 1/sqrt(fan_in) (tanh) or sqrt(2/fan_in) (relu); zero biases.
ParameterSet init_body(const ModelArch& arch, std::uint64_t seed);
ParameterSet init_model(const ModelArch& arch, std::uint64_t seed);
/// Replaces any head on `ps` with a freshly initialised one for `arch`.
ParameterSet with_fresh_head(ParameterSet ps, const ModelArch& arch, std::uint64_t seed);
ParameterSet strip_head(ParameterSet ps);

/// Throws Error(structural) unless `ps` is exactly the encoder of `arch`.
void check_body(const ModelArch& arch, const ParameterSet& ps);
/// Throws Error(structural) unless `ps` is exactly encoder + head of `arch`.
void check_model(const ModelArch& arch, const ParameterSet& ps);

template <class T>
struct BasicMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  BasicMatrix() = default;
  BasicMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  T& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const T> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<T> row(std::size_t r) { return {values.data() + r * cols, cols}; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

struct LabeledSet {
  Matrix features;
  std::vector<std::uint32_t> labels;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

struct UnlabeledSet {
  Matrix features;

  std::size_t size() const noexcept { return features.rows; }
};

/// `labels` is used by cross-entropy, `targets` by reconstruction.
struct Batch {
  Matrix inputs;
  Matrix targets;
  std::vector<std::uint32_t> labels;
};

Batch full_batch(const LabeledSet& data);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t updates = 1000;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::cross_entropy;

  /// Throws Error(config) on a non-positive rate or batch size.
  void validate() const;
};

/// Outputs (logits or reconstructions), one row per input row.
MatrixD forward(const ModelArch& arch, const ParameterSet& ps, const Matrix& inputs);

struct LossAndGrads {
  double loss = 0.0;
  ParameterSet grads;
};

/// Mean loss over the batch and its gradient with respect to every tensor.
/// Throws Error(divergence) on a non-finite loss or gradient.
LossAndGrads loss_and_grads(const ModelArch& arch, const ParameterSet& ps,
                            const Batch& batch, LossKind kind);

// 64-bit entry points. WideParams holds the model tensors in layout order;
// the float API above widens, calls these, and narrows the gradients.
using WideParams = std::vector<std::vector<double>>;

WideParams widen(const ParameterSet& ps);
double loss_wide(const ModelArch& arch, const WideParams& params, const Batch& batch,
                 LossKind kind);

struct WideLossAndGrads {
  double loss = 0.0;
  WideParams grads;
};
WideLossAndGrads loss_and_grads_wide(const ModelArch& arch, const WideParams& params,
                                     const Batch& batch, LossKind kind);

/// w' = w - lr * g on every element, zeroed or not.
ParameterSet sgd_step(ParameterSet ps, const ParameterSet& grads, double lr);

/// Minibatch SGD over a labeled set. Batches are drawn with replacement from
/// a stream seeded by cfg.seed, and the stream continues across run() calls,
/// so run(a) then run(b) equals run(a + b).
class SupervisedTrainer {
 public:
  SupervisedTrainer(ModelArch arch, TrainConfig cfg, const LabeledSet& data);

  /// Performs `steps` updates in place; returns their mean loss (NaN if 0).
  double run(ParameterSet& ps, std::size_t steps);

  std::size_t updates_done() const noexcept { return updates_; }

 private:
  ModelArch arch_;
  TrainConfig cfg_;
  const LabeledSet* data_;
  Rng rng_;
  std::size_t updates_ = 0;
};

/// Denoising pre-training: reconstruct clean rows from rows corrupted with
/// Gaussian noise. `arch` must carry a reconstruction head; the returned set
/// is the trained encoder only, tagged Role::pretrained. When `loss_trace`
/// is given, the loss of every update is appended to it.
ParameterSet pretrain_denoising(const ModelArch& arch, const UnlabeledSet& data,
                                const TrainConfig& cfg, double noise_std = 0.3,
                                std::vector<double>* loss_trace = nullptr);

/// Attaches with_fresh_head(ps, arch, cfg.seed) and trains
/// every weight jointly for cfg.updates. Role becomes finetuned_target.
ParameterSet finetune_supervised(const ModelArch& arch, ParameterSet ps,
                                 const LabeledSet& data, const TrainConfig& cfg);

/// Misclassification rate; argmax ties go to the lower class index.
double evaluate(const ModelArch& arch, const ParameterSet& ps, const LabeledSet& data);

}  // namespace pada

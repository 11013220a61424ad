#include "pada/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pada/error.hpp"

namespace pada {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::tanh ? "tanh" : "relu";
}

std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::cross_entropy ? "cross_entropy" : "mse_reconstruction";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw Error(ErrorKind::config, "unknown activation '" + std::string(name) + "'");
}

void ModelArch::validate() const {
  if (input_dim == 0) throw Error(ErrorKind::config, "model input width must be positive");
  if (hidden.empty()) throw Error(ErrorKind::config, "model needs at least one hidden layer");
  for (std::size_t h : hidden) {
    if (h == 0) throw Error(ErrorKind::config, "hidden widths must be positive");
  }
  if (output_dim == 0) throw Error(ErrorKind::config, "model output width must be positive");
}

ModelArch ModelArch::with_classification_head(std::size_t classes) const {
  ModelArch a = *this;
  a.output_dim = classes;
  a.head = HeadKind::classification;
  return a;
}

ModelArch ModelArch::with_reconstruction_head() const {
  ModelArch a = *this;
  a.output_dim = input_dim;
  a.head = HeadKind::reconstruction;
  return a;
}

std::string weight_name(std::size_t layer) {
  return "encoder." + std::to_string(layer) + ".weight";
}

std::string bias_name(std::size_t layer) {
  return "encoder." + std::to_string(layer) + ".bias";
}

namespace {

constexpr std::uint64_t kBodyStream = 11;
constexpr std::uint64_t kHeadStream = 12;
constexpr std::uint64_t kBatchStream = 13;
constexpr std::uint64_t kNoiseStream = 14;

const std::string kHeadWeight = "head.weight";
const std::string kHeadBias = "head.bias";

double init_std(Activation a, std::size_t fan_in) {
  const double f = static_cast<double>(fan_in);
  return a == Activation::relu ? std::sqrt(2.0 / f) : 1.0 / std::sqrt(f);
}

Tensor gaussian_matrix(std::string name, std::size_t rows, std::size_t cols, double stddev,
                       Rng& rng) {
  std::vector<float> data(rows * cols);
  for (float& v : data) v = static_cast<float>(stddev * rng.normal());
  return make_tensor(std::move(name), {rows, cols}, std::move(data), true);
}

struct LayerShape {
  std::string weight;
  std::string bias;
  std::size_t out;
  std::size_t in;
};

std::vector<LayerShape> layout(const ModelArch& arch, bool with_head) {
  std::vector<LayerShape> out;
  std::size_t prev = arch.input_dim;
  for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
    out.push_back({weight_name(l), bias_name(l), arch.hidden[l], prev});
    prev = arch.hidden[l];
  }
  if (with_head) out.push_back({kHeadWeight, kHeadBias, arch.output_dim, prev});
  return out;
}

void check_layout(const ModelArch& arch, const ParameterSet& ps, bool with_head) {
  const auto expected = layout(arch, with_head);
  if (ps.size() != 2 * expected.size()) {
    throw Error(ErrorKind::structural,
                "expected " + std::to_string(2 * expected.size()) + " tensors, found " +
                    std::to_string(ps.size()));
  }
  for (std::size_t l = 0; l < expected.size(); ++l) {
    const Tensor& w = ps[2 * l];
    const Tensor& b = ps[2 * l + 1];
    const auto& e = expected[l];
    if (w.name != e.weight || w.shape != std::vector<std::size_t>{e.out, e.in}) {
      throw Error(ErrorKind::structural, "tensor '" + w.name + "' does not match layer '" +
                                             e.weight + "'");
    }
    if (b.name != e.bias || b.shape != std::vector<std::size_t>{e.out}) {
      throw Error(ErrorKind::structural, "tensor '" + b.name + "' does not match layer '" +
                                             e.bias + "'");
    }
  }
}

void check_wide(const ModelArch& arch, const WideParams& params) {
  const auto expected = layout(arch, true);
  if (params.size() != 2 * expected.size()) {
    throw Error(ErrorKind::structural, "wide parameter count does not match architecture");
  }
  for (std::size_t l = 0; l < expected.size(); ++l) {
    if (params[2 * l].size() != expected[l].out * expected[l].in ||
        params[2 * l + 1].size() != expected[l].out) {
      throw Error(ErrorKind::structural, "wide parameter sizes do not match architecture");
    }
  }
}

// Post-activation values for every layer; the last entry is the raw head output.
struct Activations {
  std::vector<MatrixD> layers;
};

Activations run_forward(const ModelArch& arch, const WideParams& p, const Matrix& inputs) {
  if (inputs.cols != arch.input_dim) {
    throw Error(ErrorKind::structural, "input width " + std::to_string(inputs.cols) +
                                           " != model input " + std::to_string(arch.input_dim));
  }
  const std::size_t layers = arch.hidden.size() + 1;
  const std::size_t rows = inputs.rows;
  Activations acts;
  acts.layers.reserve(layers + 1);
  MatrixD x(rows, inputs.cols);
  for (std::size_t i = 0; i < inputs.values.size(); ++i) x.values[i] = inputs.values[i];
  acts.layers.push_back(std::move(x));

  for (std::size_t l = 0; l < layers; ++l) {
    const MatrixD& in = acts.layers.back();
    const auto& w = p[2 * l];
    const auto& b = p[2 * l + 1];
    const std::size_t out_dim = b.size();
    const bool is_head = l + 1 == layers;
    MatrixD out(rows, out_dim);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = in.values.data() + r * in.cols;
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double* wr = w.data() + o * in.cols;
        double s = b[o];
        for (std::size_t i = 0; i < in.cols; ++i) s += wr[i] * xr[i];
        if (!is_head) {
          s = arch.activation == Activation::tanh ? std::tanh(s) : std::max(0.0, s);
        }
        out(r, o) = s;
      }
    }
    acts.layers.push_back(std::move(out));
  }
  return acts;
}

void check_batch(const ModelArch& arch, const Batch& batch, LossKind kind) {
  if (batch.inputs.rows == 0) throw Error(ErrorKind::empty, "empty batch");
  if (kind == LossKind::cross_entropy) {
    if (batch.labels.size() != batch.inputs.rows) {
      throw Error(ErrorKind::structural, "cross-entropy needs one label per row");
    }
    for (auto y : batch.labels) {
      if (y >= arch.output_dim) throw Error(ErrorKind::range, "label outside head width");
    }
  } else if (batch.targets.rows != batch.inputs.rows || batch.targets.cols != arch.output_dim) {
    throw Error(ErrorKind::structural, "reconstruction targets do not match head width");
  }
}

// Loss and dLoss/dOutput for the head output.
double output_loss(const MatrixD& out, const Batch& batch, LossKind kind, MatrixD* delta) {
  const std::size_t rows = out.rows;
  const std::size_t cols = out.cols;
  double total = 0.0;
  if (delta) *delta = MatrixD(rows, cols);
  if (kind == LossKind::cross_entropy) {
    const double inv = 1.0 / static_cast<double>(rows);
    std::vector<double> e(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      auto z = out.row(r);
      const double m = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        e[c] = std::exp(z[c] - m);
        sum += e[c];
      }
      const std::uint32_t y = batch.labels[r];
      total += (m + std::log(sum)) - z[y];
      if (delta) {
        for (std::size_t c = 0; c < cols; ++c) {
          (*delta)(r, c) = (e[c] / sum - (c == y ? 1.0 : 0.0)) * inv;
        }
      }
    }
    return total * inv;
  }
  const double inv = 1.0 / static_cast<double>(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double diff = out(r, c) - static_cast<double>(batch.targets(r, c));
      total += diff * diff;
      if (delta) (*delta)(r, c) = 2.0 * diff * inv;
    }
  }
  return total * inv;
}

}  // namespace

ParameterSet init_body(const ModelArch& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(derive_seed(seed, kBodyStream));
  ParameterSet ps(Role::pretrained);
  for (const auto& l : layout(arch, false)) {
    ps.add(gaussian_matrix(l.weight, l.out, l.in, init_std(arch.activation, l.in), rng));
    ps.add(zeros_tensor(l.bias, {l.out}));
  }
  return ps;
}

ParameterSet with_fresh_head(ParameterSet ps, const ModelArch& arch, std::uint64_t seed) {
  arch.validate();
  ps = strip_head(std::move(ps));
  check_body(arch, ps);
  Rng rng(derive_seed(seed, kHeadStream));
  const std::size_t in = arch.hidden.back();
  ps.add(gaussian_matrix(kHeadWeight, arch.output_dim, in, 1.0 / std::sqrt(double(in)), rng));
  ps.add(zeros_tensor(kHeadBias, {arch.output_dim}));
  return ps;
}

ParameterSet init_model(const ModelArch& arch, std::uint64_t seed) {
  return with_fresh_head(init_body(arch, seed), arch, seed);
}

ParameterSet strip_head(ParameterSet ps) {
  ps.remove_prefix(kHeadPrefix);
  return ps;
}

void check_body(const ModelArch& arch, const ParameterSet& ps) { check_layout(arch, ps, false); }
void check_model(const ModelArch& arch, const ParameterSet& ps) { check_layout(arch, ps, true); }

Batch full_batch(const LabeledSet& data) {
  Batch b;
  b.inputs = data.features;
  b.labels = data.labels;
  return b;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::config, "learning rate must be positive");
  }
  if (batch_size == 0) throw Error(ErrorKind::config, "batch size must be positive");
}

WideParams widen(const ParameterSet& ps) {
  WideParams out;
  out.reserve(ps.size());
  for (const Tensor& t : ps) out.emplace_back(t.data.begin(), t.data.end());
  return out;
}

MatrixD forward(const ModelArch& arch, const ParameterSet& ps, const Matrix& inputs) {
  arch.validate();
  check_model(arch, ps);
  auto acts = run_forward(arch, widen(ps), inputs);
  return std::move(acts.layers.back());
}

double loss_wide(const ModelArch& arch, const WideParams& params, const Batch& batch,
                 LossKind kind) {
  check_wide(arch, params);
  check_batch(arch, batch, kind);
  const auto acts = run_forward(arch, params, batch.inputs);
  return output_loss(acts.layers.back(), batch, kind, nullptr);
}

WideLossAndGrads loss_and_grads_wide(const ModelArch& arch, const WideParams& params,
                                     const Batch& batch, LossKind kind) {
  check_wide(arch, params);
  check_batch(arch, batch, kind);
  const auto acts = run_forward(arch, params, batch.inputs);
  const std::size_t layers = arch.hidden.size() + 1;
  const std::size_t rows = batch.inputs.rows;

  WideLossAndGrads result;
  MatrixD delta;
  result.loss = output_loss(acts.layers.back(), batch, kind, &delta);
  result.grads.resize(params.size());

  for (std::size_t l = layers; l-- > 0;) {
    const MatrixD& in = acts.layers[l];
    const auto& w = params[2 * l];
    auto& gw = result.grads[2 * l];
    auto& gb = result.grads[2 * l + 1];
    const std::size_t out_dim = delta.cols;
    gw.assign(w.size(), 0.0);
    gb.assign(out_dim, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = in.values.data() + r * in.cols;
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = delta(r, o);
        gb[o] += d;
        double* gr = gw.data() + o * in.cols;
        for (std::size_t i = 0; i < in.cols; ++i) gr[i] += d * xr[i];
      }
    }
    if (l == 0) break;
    // Back through W, then through the activation of layer l-1 (whose
    // output is `in`).
    MatrixD prev(rows, in.cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = delta(r, o);
        const double* wr = w.data() + o * in.cols;
        for (std::size_t i = 0; i < in.cols; ++i) prev(r, i) += d * wr[i];
      }
      for (std::size_t i = 0; i < in.cols; ++i) {
        const double a = in(r, i);
        prev(r, i) *= arch.activation == Activation::tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
      }
    }
    delta = std::move(prev);
  }
  return result;
}

LossAndGrads loss_and_grads(const ModelArch& arch, const ParameterSet& ps, const Batch& batch,
                            LossKind kind) {
  arch.validate();
  check_model(arch, ps);
  auto wide = loss_and_grads_wide(arch, widen(ps), batch, kind);
  if (!std::isfinite(wide.loss)) throw Error(ErrorKind::divergence, "non-finite loss");
  LossAndGrads out;
  out.loss = wide.loss;
  out.grads = ParameterSet(ps.role());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Tensor g;
    g.name = ps[i].name;
    g.shape = ps[i].shape;
    g.prunable = ps[i].prunable;
    g.data.resize(wide.grads[i].size());
    for (std::size_t e = 0; e < g.data.size(); ++e) {
      const double v = wide.grads[i][e];
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::divergence, "non-finite gradient in '" + g.name + "'");
      }
      g.data[e] = static_cast<float>(v);
    }
    out.grads.add(std::move(g));
  }
  return out;
}

ParameterSet sgd_step(ParameterSet ps, const ParameterSet& grads, double lr) {
  if (!shapes_compatible(ps, grads)) {
    throw Error(ErrorKind::structural,
                "gradient structure mismatch: " + first_structural_mismatch(ps, grads));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& w = ps[i].data;
    const auto& g = grads[i].data;
    for (std::size_t e = 0; e < w.size(); ++e) {
      w[e] = static_cast<float>(static_cast<double>(w[e]) - lr * static_cast<double>(g[e]));
    }
  }
  return ps;
}

SupervisedTrainer::SupervisedTrainer(ModelArch arch, TrainConfig cfg, const LabeledSet& data)
    : arch_(std::move(arch)),
      cfg_(cfg),
      data_(&data),
      rng_(derive_seed(cfg.seed, kBatchStream)) {
  arch_.validate();
  cfg_.validate();
  if (arch_.head != HeadKind::classification) {
    throw Error(ErrorKind::config, "supervised training needs a classification head");
  }
  if (data.size() == 0) throw Error(ErrorKind::empty, "labeled dataset is empty");
  if (data.features.cols != arch_.input_dim) {
    throw Error(ErrorKind::structural, "dataset width does not match model input");
  }
}

double SupervisedTrainer::run(ParameterSet& ps, std::size_t steps) {
  if (steps == 0) return std::numeric_limits<double>::quiet_NaN();
  check_model(arch_, ps);
  const LabeledSet& data = *data_;
  const std::size_t bs = cfg_.batch_size;
  Batch batch;
  batch.inputs = Matrix(bs, data.features.cols);
  batch.labels.resize(bs);
  double sum = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t r = 0; r < bs; ++r) {
      const std::size_t idx = rng_.below(data.size());
      auto src = data.features.row(idx);
      std::copy(src.begin(), src.end(), batch.inputs.row(r).begin());
      batch.labels[r] = data.labels[idx];
    }
    LossAndGrads lg;
    try {
      lg = loss_and_grads(arch_, ps, batch, LossKind::cross_entropy);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::divergence) throw;
      throw Error(ErrorKind::divergence,
                  std::string(e.what()) + " at update " + std::to_string(updates_ + 1));
    }
    ps = sgd_step(std::move(ps), lg.grads, cfg_.learning_rate);
    ++updates_;
    sum += lg.loss;
  }
  return sum / static_cast<double>(steps);
}

ParameterSet pretrain_denoising(const ModelArch& arch, const UnlabeledSet& data,
                                const TrainConfig& cfg, double noise_std,
                                std::vector<double>* loss_trace) {
  arch.validate();
  cfg.validate();
  if (arch.head != HeadKind::reconstruction || arch.output_dim != arch.input_dim) {
    throw Error(ErrorKind::config, "denoising pre-training needs a reconstruction head");
  }
  if (cfg.loss != LossKind::mse_reconstruction) {
    throw Error(ErrorKind::config, "denoising pre-training uses the mse_reconstruction loss");
  }
  if (data.size() == 0) throw Error(ErrorKind::empty, "unlabeled dataset is empty");
  if (data.features.cols != arch.input_dim) {
    throw Error(ErrorKind::structural, "dataset width does not match model input");
  }

  ParameterSet ps = init_model(arch, cfg.seed);
  Rng batch_rng(derive_seed(cfg.seed, kBatchStream));
  Rng noise_rng(derive_seed(cfg.seed, kNoiseStream));
  const std::size_t bs = cfg.batch_size;
  const std::size_t width = data.features.cols;
  Batch batch;
  batch.inputs = Matrix(bs, width);
  batch.targets = Matrix(bs, width);
  for (std::size_t step = 0; step < cfg.updates; ++step) {
    for (std::size_t r = 0; r < bs; ++r) {
      auto src = data.features.row(batch_rng.below(data.size()));
      for (std::size_t c = 0; c < width; ++c) {
        batch.targets(r, c) = src[c];
        batch.inputs(r, c) = static_cast<float>(src[c] + noise_std * noise_rng.normal());
      }
    }
    LossAndGrads lg;
    try {
      lg = loss_and_grads(arch, ps, batch, LossKind::mse_reconstruction);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::divergence) throw;
      throw Error(ErrorKind::divergence,
                  std::string(e.what()) + " at update " + std::to_string(step + 1));
    }
    if (loss_trace != nullptr) loss_trace->push_back(lg.loss);
    ps = sgd_step(std::move(ps), lg.grads, cfg.learning_rate);
  }
  ps = strip_head(std::move(ps));
  ps.set_role(Role::pretrained);
  return ps;
}

ParameterSet finetune_supervised(const ModelArch& arch, ParameterSet ps, const LabeledSet& data,
                                 const TrainConfig& cfg) {
  if (cfg.loss != LossKind::cross_entropy) {
    throw Error(ErrorKind::config, "supervised fine-tuning uses the cross_entropy loss");
  }
  ps = with_fresh_head(std::move(ps), arch, cfg.seed);
  SupervisedTrainer trainer(arch, cfg, data);
  trainer.run(ps, cfg.updates);
  ps.set_role(Role::finetuned_target);
  return ps;
}

double evaluate(const ModelArch& arch, const ParameterSet& ps, const LabeledSet& data) {
  if (data.size() == 0) throw Error(ErrorKind::empty, "evaluation dataset is empty");
  if (arch.head != HeadKind::classification) {
    throw Error(ErrorKind::config, "evaluation needs a classification head");
  }
  const MatrixD out = forward(arch, ps, data.features);
  std::size_t wrong = 0;
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto z = out.row(r);
    const auto best = static_cast<std::uint32_t>(std::max_element(z.begin(), z.end()) - z.begin());
    wrong += best != data.labels[r] ? 1 : 0;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace pada

#include "secu/encoder.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

namespace secu {

namespace {

std::uint64_t next_encoder_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}

void check_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": matrix shape mismatch");
  }
}

}  // namespace

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
    throw ShapeError("ParamGrads: layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    check_same_shape(weights[l], other.weights[l], "ParamGrads");
    axpy(1.0, other.weights[l].values(), weights[l].values());
    axpy(1.0, other.biases[l], biases[l]);
  }
  return *this;
}

void ParamGrads::scale(double factor) {
  for (auto& w : weights) {
    for (double& v : w.values()) v *= factor;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= factor;
  }
}

EncoderMLP::EncoderMLP(std::vector<std::size_t> layer_dims, SeededRng& rng)
    : id_(next_encoder_id()), dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) {
    throw std::invalid_argument("EncoderMLP: need at least one layer (got " +
                                std::to_string(dims_.size()) + " dims)");
  }
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("EncoderMLP: zero-width layer");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Mat(out, in), Vec(out), Mat(out, in), Vec(out, 0.0)};
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
  }
}

EncoderMLP::EncoderMLP(std::vector<DenseLayer> layers) : id_(next_encoder_id()), layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("EncoderMLP: need at least one layer");
  dims_.push_back(layers_.front().weight.cols());
  for (auto& layer : layers_) {
    dims_.push_back(layer.weight.rows());
    if (layer.weight_momentum.empty()) layer.weight_momentum = Mat(layer.weight.rows(), layer.weight.cols());
    if (layer.bias_momentum.empty()) layer.bias_momentum = Vec(layer.bias.size(), 0.0);
  }
  validate();
}

void EncoderMLP::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.cols() != dims_[l] || layer.weight.rows() != dims_[l + 1] ||
        layer.bias.size() != dims_[l + 1]) {
      throw ShapeError("EncoderMLP: layer " + std::to_string(l) + " is not chain-compatible");
    }
    check_same_shape(layer.weight, layer.weight_momentum, "EncoderMLP momentum");
    if (layer.bias_momentum.size() != layer.bias.size()) {
      throw ShapeError("EncoderMLP: bias momentum shape mismatch");
    }
  }
}

std::vector<DenseLayer>& EncoderMLP::mutable_layers() {
  ++version_;
  return layers_;
}

EncoderOutput EncoderMLP::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw ShapeError("EncoderMLP::forward: input has dim " + std::to_string(input.size()) +
                     ", expected " + std::to_string(input_dim()));
  }
  ActivationTape tape;
  tape.encoder_id = id_;
  tape.version = version_;
  Vec h(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vec z = matvec(layers_[l].weight, h);
    axpy(1.0, layers_[l].bias, z);
    tape.inputs.push_back(std::move(h));
    h = z;
    if (l + 1 < layers_.size()) {
      for (double& v : h) v = v > 0.0 ? v : 0.0;
    }
    tape.pre_activations.push_back(std::move(z));
  }
  tape.output_norm = norm2(h);
  tape.embedding = normalize(h);
  Vec embedding = tape.embedding;
  return {std::move(embedding), std::move(tape)};
}

Vec EncoderMLP::embed(std::span<const double> input) const { return forward(input).embedding; }

Mat EncoderMLP::embed_rows(const Mat& inputs) const {
  Mat out(inputs.rows(), output_dim());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const Vec e = embed(inputs.row(i));
    std::copy(e.begin(), e.end(), out.row(i).begin());
  }
  return out;
}

ParamGrads EncoderMLP::zero_grads() const {
  ParamGrads g;
  for (const auto& layer : layers_) {
    g.weights.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.biases.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

ParamGrads EncoderMLP::backward(const ActivationTape& tape,
                                std::span<const double> grad_embedding) const {
  if (tape.encoder_id != id_ || tape.version != version_ ||
      tape.pre_activations.size() != layers_.size()) {
    throw std::logic_error("EncoderMLP::backward: stale activation tape");
  }
  if (grad_embedding.size() != output_dim()) {
    throw ShapeError("EncoderMLP::backward: gradient has dim " +
                     std::to_string(grad_embedding.size()) + ", expected " +
                     std::to_string(output_dim()));
  }
  // Through x / ||x||: (I - x_hat x_hat^T) g / ||x||.
  const Vec& xhat = tape.embedding;
  const double proj = dot(xhat, grad_embedding);
  Vec delta(grad_embedding.begin(), grad_embedding.end());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    delta[k] = (delta[k] - proj * xhat[k]) / tape.output_norm;
  }

  ParamGrads g = zero_grads();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) {
      const Vec& z = tape.pre_activations[l];
      for (std::size_t k = 0; k < delta.size(); ++k) {
        if (!(z[k] > 0.0)) delta[k] = 0.0;
      }
    }
    const Vec& in = tape.inputs[l];
    Mat& gw = g.weights[l];
    for (std::size_t r = 0; r < gw.rows(); ++r) {
      auto row = gw.row(r);
      for (std::size_t c = 0; c < gw.cols(); ++c) row[c] = delta[r] * in[c];
    }
    g.biases[l] = delta;
    if (l > 0) delta = matvec_transposed(layers_[l].weight, delta);
  }
  return g;
}

void EncoderMLP::sgd_step(const ParamGrads& grads, double lr, double momentum) {
  if (lr < 0.0 || momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("EncoderMLP::sgd_step: need lr >= 0 and 0 <= momentum < 1");
  }
  if (grads.weights.size() != layers_.size() || grads.biases.size() != layers_.size()) {
    throw ShapeError("EncoderMLP::sgd_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    check_same_shape(grads.weights[l], layers_[l].weight, "EncoderMLP::sgd_step");
    if (grads.biases[l].size() != layers_[l].bias.size()) {
      throw ShapeError("EncoderMLP::sgd_step: bias gradient shape mismatch");
    }
  }
  ++version_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    auto& wb = layer.weight_momentum.values();
    auto& w = layer.weight.values();
    const auto& gw = grads.weights[l].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      wb[k] = momentum * wb[k] + gw[k];
      w[k] -= lr * wb[k];
    }
    auto& bb = layer.bias_momentum;
    const auto& gb = grads.biases[l];
    for (std::size_t k = 0; k < layer.bias.size(); ++k) {
      bb[k] = momentum * bb[k] + gb[k];
      layer.bias[k] -= lr * bb[k];
    }
  }
}

void LrSchedule::validate() const {
  if (!(base_lr > 0.0)) throw std::invalid_argument("LrSchedule: base_lr must be positive");
  if (warmup_epochs > total_epochs) {
    throw std::invalid_argument("LrSchedule: warmup_epochs exceeds total_epochs");
  }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
  schedule.validate();
  if (epoch >= schedule.total_epochs) {
    throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(schedule.total_epochs) + ")");
  }
  const std::size_t w = schedule.warmup_epochs;
  if (epoch < w) {
    return schedule.base_lr * static_cast<double>(epoch + 1) / static_cast<double>(w);
  }
  const std::size_t span = schedule.total_epochs - w - 1;
  const double progress = span == 0 ? 0.0 : static_cast<double>(epoch - w) / static_cast<double>(span);
  return schedule.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace secu

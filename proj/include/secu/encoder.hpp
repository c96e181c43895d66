#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "secu/numerics.hpp"

namespace secu {

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
  Mat weight_momentum;
  Vec bias_momentum;
};

// Everything backward needs from one forward call.
struct ActivationTape {
  std::uint64_t encoder_id = 0;
  std::uint64_t version = 0;
  // inputs[l] is the input fed to layer l (post-activation of layer l-1).
  std::vector<Vec> inputs;
  // pre_activations[l] = W_l inputs[l] + b_l.
  std::vector<Vec> pre_activations;
  double output_norm = 0.0;
  Vec embedding;
};

struct ParamGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  ParamGrads& operator+=(const ParamGrads& other);
  void scale(double factor);
};

struct EncoderOutput {
  Vec embedding;
  ActivationTape tape;
};

// Multilayer perceptron with rectifier activations between layers and an
// L2 normalization on the output. No activation follows the last layer.
class EncoderMLP {
 public:
  // layer_dims = {d_in, h_1, ..., d_out}; needs at least one layer.
  EncoderMLP(std::vector<std::size_t> layer_dims, SeededRng& rng);
  // Builds from explicit layers (checkpoint loading, tests).
  explicit EncoderMLP(std::vector<DenseLayer> layers);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  // Mutable access bumps the version so outstanding tapes become stale.
  std::vector<DenseLayer>& mutable_layers();

  EncoderOutput forward(std::span<const double> input) const;
  // Embedding only; no tape.
  Vec embed(std::span<const double> input) const;
  // Embeds each row of inputs.
  Mat embed_rows(const Mat& inputs) const;

  ParamGrads backward(const ActivationTape& tape, std::span<const double> grad_embedding) const;
  ParamGrads zero_grads() const;

  // buf <- momentum * buf + grad; param <- param - lr * buf.
  void sgd_step(const ParamGrads& grads, double lr, double momentum);

 private:
  void validate() const;

  std::uint64_t id_;
  std::uint64_t version_ = 0;
  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
};

struct LrSchedule {
  double base_lr = 0.2;
  std::size_t warmup_epochs = 10;
  std::size_t total_epochs = 400;

  void validate() const;
};

// Linear per-epoch warm-up to base_lr, then cosine decay to zero at the last epoch.
double lr_at(const LrSchedule& schedule, std::size_t epoch);

}  // namespace secu

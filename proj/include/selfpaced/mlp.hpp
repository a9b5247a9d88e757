#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "selfpaced/matrix.hpp"
#include "selfpaced/rng.hpp"

namespace selfpaced {

/// Fully connected layer computing x * weight + bias; weight is in x out.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward network: ReLU after every layer except the last, which is linear.
/// Gradients use the same type.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp zeros(std::span<const std::size_t> layer_sizes);

  std::vector<std::size_t> layer_sizes() const;
  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  // One span per tensor: weight then bias for each layer, in layer order.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// He-uniform weights, U(-sqrt(6 / fan_in), sqrt(6 / fan_in)); zero biases.
Mlp init_mlp(std::span<const std::size_t> layer_sizes, Rng& rng);

/// Activations kept for backprop. inputs[l] is the input of layer l.
struct Tape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

ForwardResult forward(const Mlp& net, const Matrix& x);
Matrix predict(const Mlp& net, const Matrix& x);

struct BackwardResult {
  Mlp grads;
  Matrix grad_input;
};

/// Reverse-mode gradients of an upstream scalar whose gradient with respect to
/// the network output is `grad_output`.
BackwardResult backward(const Mlp& net, const Tape& tape, const Matrix& grad_output);

struct CrossEntropy {
  std::vector<double> losses;  // one per row, >= 0
  Matrix grad_logits;          // softmax - onehot, per row (unscaled)
};

CrossEntropy ce_loss_per_sample(const Matrix& logits, std::span<const std::size_t> labels);

std::vector<std::size_t> argmax_rows(const Matrix& m);

}  // namespace selfpaced

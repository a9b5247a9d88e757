#pragma once

#include <cstdint>
#include <vector>

#include "selfpaced/mlp.hpp"

namespace selfpaced {

struct SgdConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 0.0005;
};

/// Momentum buffers mirror the parameter tensors; allocated on the first step.
struct SgdState {
  SgdConfig config;
  std::vector<std::vector<double>> velocity;
};

struct AdamConfig {
  double learning_rate = 0.0001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

// Weight decay enters both updates as an L2 term added to the gradient:
//   g' = g + weight_decay * p
//
// SGD (PyTorch convention):
//   v <- momentum * v + g'
//   p <- p - lr * (g' + momentum * v)   nesterov
//   p <- p - lr * v                     classical
//
// Adam with bias-corrected moments:
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
void sgd_step(Mlp& params, const Mlp& grads, SgdState& state);
void adam_step(Mlp& params, const Mlp& grads, AdamState& state);

}  // namespace selfpaced

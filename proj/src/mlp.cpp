#include "selfpaced/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "selfpaced/numerics.hpp"

namespace selfpaced {

Mlp Mlp::zeros(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  Mlp net;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] == 0 || layer_sizes[l + 1] == 0) throw std::invalid_argument("Mlp layer size 0");
    net.layers.push_back({Matrix(layer_sizes[l], layer_sizes[l + 1]), std::vector<double>(layer_sizes[l + 1])});
  }
  return net;
}

std::vector<std::size_t> Mlp::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().weight.rows());
  for (const auto& layer : layers) sizes.push_back(layer.weight.cols());
  return sizes;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

bool Mlp::all_finite() const {
  for (auto t : tensors())
    for (double v : t)
      if (!std::isfinite(v)) return false;
  return true;
}

std::vector<std::span<double>> Mlp::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> Mlp::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
  return out;
}

Mlp init_mlp(std::span<const std::size_t> layer_sizes, Rng& rng) {
  Mlp net = Mlp::zeros(layer_sizes);
  for (auto& layer : net.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.rows()));
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  }
  return net;
}

namespace {

void add_bias(Matrix& z, const std::vector<double>& bias) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

void check_input(const Mlp& net, const Matrix& x) {
  if (net.layers.empty()) throw std::invalid_argument("forward: network has no layers");
  if (x.cols() != net.input_dim()) {
    throw DimensionError("forward: input " + x.shape() + " vs first layer weight " +
                         net.layers.front().weight.shape());
  }
}

}  // namespace

ForwardResult forward(const Mlp& net, const Matrix& x) {
  check_input(net, x);
  ForwardResult result;
  Matrix act = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = matmul(act, net.layers[l].weight);
    add_bias(z, net.layers[l].bias);
    result.tape.inputs.push_back(std::move(act));
    if (l + 1 == net.layers.size()) {
      result.output = std::move(z);
      break;
    }
    act = z;
    for (double& v : act.values()) v = v > 0.0 ? v : 0.0;
    result.tape.pre_activations.push_back(std::move(z));
  }
  return result;
}

Matrix predict(const Mlp& net, const Matrix& x) {
  check_input(net, x);
  Matrix act = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = matmul(act, net.layers[l].weight);
    add_bias(z, net.layers[l].bias);
    if (l + 1 < net.layers.size()) {
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
    }
    act = std::move(z);
  }
  return act;
}

BackwardResult backward(const Mlp& net, const Tape& tape, const Matrix& grad_output) {
  const std::size_t depth = net.layers.size();
  if (tape.inputs.size() != depth || tape.pre_activations.size() + 1 != depth) {
    throw DimensionError("backward: tape holds " + std::to_string(tape.inputs.size()) +
                         " layer inputs for a " + std::to_string(depth) + "-layer network");
  }
  const std::size_t n = tape.inputs.front().rows();
  if (grad_output.rows() != n || grad_output.cols() != net.output_dim()) {
    throw DimensionError("backward: grad_output " + grad_output.shape() + " vs expected " +
                         std::to_string(n) + "x" + std::to_string(net.output_dim()));
  }
  for (std::size_t l = 0; l < depth; ++l) {
    if (tape.inputs[l].cols() != net.layers[l].weight.rows() || tape.inputs[l].rows() != n) {
      throw DimensionError("backward: tape input " + tape.inputs[l].shape() + " does not match layer " +
                           std::to_string(l) + " weight " + net.layers[l].weight.shape());
    }
  }

  BackwardResult result{Mlp::zeros(net.layer_sizes()), Matrix()};
  Matrix delta = grad_output;
  for (std::size_t l = depth; l-- > 0;) {
    auto& g = result.grads.layers[l];
    g.weight = matmul_tn(tape.inputs[l], delta);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto row = delta.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    Matrix upstream = matmul_nt(delta, net.layers[l].weight);
    if (l > 0) {
      const Matrix& z = tape.pre_activations[l - 1];
      auto up = upstream.values();
      auto zv = z.values();
      for (std::size_t k = 0; k < up.size(); ++k) {
        if (!(zv[k] > 0.0)) up[k] = 0.0;
      }
    }
    delta = std::move(upstream);
  }
  result.grad_input = std::move(delta);
  return result;
}

CrossEntropy ce_loss_per_sample(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("ce_loss_per_sample: " + std::to_string(labels.size()) + " labels for logits " +
                         logits.shape());
  }
  CrossEntropy out{std::vector<double>(logits.rows()), Matrix(logits.rows(), logits.cols())};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const std::size_t y = labels[i];
    if (y >= logits.cols()) {
      throw std::out_of_range("ce_loss_per_sample: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(logits.cols()) + ")");
    }
    auto row = logits.row(i);
    double hi = row[0];
    for (double v : row) hi = std::max(hi, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - hi);
    // (hi - row[y]) >= 0 and log(sum) >= 0 since sum >= 1.
    out.losses[i] = (hi - row[y]) + std::log(sum);
    auto grad = out.grad_logits.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) grad[j] = std::exp(row[j] - hi) / sum;
    grad[y] -= 1.0;
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[out[i]]) out[i] = j;
  }
  return out;
}

}  // namespace selfpaced

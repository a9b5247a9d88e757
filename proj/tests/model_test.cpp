#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "selfpaced/checkpoint.hpp"
#include "selfpaced/mlp.hpp"
#include "selfpaced/numerics.hpp"
#include "selfpaced/optim.hpp"

using namespace selfpaced;

namespace {

std::vector<double> flatten(const Mlp& net) {
  std::vector<double> out;
  for (auto t : net.tensors()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

// Upstream scalar: sum of (output * weights) so grad_output = weights.
double weighted_sum(const Matrix& out, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * w.values()[i];
  return s;
}

}  // namespace

TEST(Forward, ZeroNetworkGivesZeros) {
  const std::vector<std::size_t> sizes{3, 5, 2};
  Rng rng(1);
  const Matrix out = predict(Mlp::zeros(sizes), oracle::random_matrix(4, 3, rng));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, SingleLayerIsAffine) {
  Rng rng(2);
  const std::vector<std::size_t> sizes{4, 3};
  const Mlp net = init_mlp(sizes, rng);
  const Matrix x = oracle::random_matrix(5, 4, rng);
  Matrix expected = oracle::naive_matmul(x, net.layers[0].weight);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) expected(i, j) += net.layers[0].bias[j];
  EXPECT_LT(oracle::max_abs_diff(predict(net, x), expected), 1e-13);
}

TEST(Forward, HiddenLayerIsRelu) {
  Rng rng(3);
  const std::vector<std::size_t> sizes{3, 6, 2};
  Mlp net = init_mlp(sizes, rng);
  for (double& b : net.layers[0].bias) b = rng.uniform(-1, 1);
  const Matrix x = oracle::random_matrix(7, 3, rng);
  const auto fwd = forward(net, x);
  const Matrix& pre = fwd.tape.pre_activations[0];
  const Matrix& act = fwd.tape.inputs[1];
  for (std::size_t i = 0; i < pre.size(); ++i) EXPECT_EQ(act.values()[i], std::max(0.0, pre.values()[i]));
}

TEST(Forward, RejectsWrongInputWidth) {
  Rng rng(4);
  const std::vector<std::size_t> sizes{3, 2};
  EXPECT_THROW(forward(init_mlp(sizes, rng), Matrix(2, 4)), DimensionError);
}

TEST(Init, HeUniformBoundsAndZeroBias) {
  Rng rng(5);
  const std::vector<std::size_t> sizes{50, 20, 10};
  const Mlp net = init_mlp(sizes, rng);
  for (const auto& layer : net.layers) {
    const double bound = std::sqrt(6.0 / layer.weight.rows());
    for (double w : layer.weight.values()) EXPECT_LE(std::abs(w), bound);
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(net.parameter_count(), 50u * 20 + 20 + 20 * 10 + 10);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const Matrix logits(3, 5, 0.7);
  const std::vector<std::size_t> labels{0, 2, 4};
  const auto ce = ce_loss_per_sample(logits, labels);
  for (double l : ce.losses) EXPECT_NEAR(l, std::log(5.0), 1e-15);
}

TEST(CrossEntropy, LargeMarginLossVanishes) {
  Matrix logits(1, 3, 0.0);
  logits(0, 1) = 50.0;
  const std::vector<std::size_t> labels{1};
  const auto ce = ce_loss_per_sample(logits, labels);
  EXPECT_LT(ce.losses[0], 1e-20);
  EXPECT_GE(ce.losses[0], 0.0);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix logits = oracle::random_matrix(4, 5, rng, -3, 3);
    std::vector<std::size_t> labels(4);
    for (auto& y : labels) y = rng.uniform_index(5);
    const auto ce = ce_loss_per_sample(logits, labels);
    auto total = [&] {
      const auto r = ce_loss_per_sample(logits, labels);
      double s = 0.0;
      for (double l : r.losses) s += l;
      return s;
    };
    const auto fd = oracle::central_differences(logits.values(), total, 1e-5);
    EXPECT_LT(oracle::relative_error(ce.grad_logits.values(), fd), 1e-6);
  }
}

TEST(CrossEntropy, LossesNonNegativeAndReductionsConsistent) {
  Rng rng(7);
  const Matrix logits = oracle::random_matrix(50, 6, rng, -10, 10);
  std::vector<std::size_t> labels(50);
  for (auto& y : labels) y = rng.uniform_index(6);
  const auto ce = ce_loss_per_sample(logits, labels);
  long double sum = 0;
  for (double l : ce.losses) {
    EXPECT_GE(l, 0.0);
    sum += l;
  }
  EXPECT_NEAR(mean(ce.losses), static_cast<double>(sum / 50), 1e-12);
}

TEST(CrossEntropy, RejectsOutOfRangeLabel) {
  const std::vector<std::size_t> labels{3};
  EXPECT_THROW(ce_loss_per_sample(Matrix(1, 3), labels), std::out_of_range);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(8);
  const std::vector<std::size_t> sizes{3, 4, 2};
  const Mlp net = init_mlp(sizes, rng);
  const Matrix x = oracle::random_matrix(5, 3, rng);
  const auto fwd = forward(net, x);
  const auto back = backward(net, fwd.tape, Matrix(5, 2));
  for (double g : flatten(back.grads)) EXPECT_EQ(g, 0.0);
}

TEST(Backward, LinearLayerClosedForm) {
  Rng rng(9);
  const std::vector<std::size_t> sizes{3, 2};
  const Mlp net = init_mlp(sizes, rng);
  const Matrix x = oracle::random_matrix(6, 3, rng);
  const Matrix g = oracle::random_matrix(6, 2, rng);
  const auto back = backward(net, forward(net, x).tape, g);
  EXPECT_LT(oracle::max_abs_diff(back.grads.layers[0].weight, oracle::naive_matmul(transpose(x), g)), 1e-13);
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i) s += g(i, j);
    EXPECT_NEAR(back.grads.layers[0].bias[j], s, 1e-13);
  }
}

TEST(Backward, ArchitectureGridMatchesFiniteDifferences) {
  Rng rng(10);
  const std::vector<std::vector<std::size_t>> grid{
      {3, 4, 2}, {5, 16, 3}, {4, 8, 8, 2}, {6, 64, 4}, {3, 5, 7, 6, 2}, {2, 32, 16, 4, 3}};
  for (const auto& sizes : grid) {
    Mlp net = init_mlp(sizes, rng);
    for (auto& layer : net.layers)
      for (double& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    const Matrix x = oracle::random_matrix(5, sizes.front(), rng);
    const Matrix w = oracle::random_matrix(5, sizes.back(), rng);
    const auto back = backward(net, forward(net, x).tape, w);
    const auto analytic = flatten(back.grads);
    std::vector<double> fd;
    for (auto t : net.tensors()) {
      const auto part = oracle::central_differences(t, [&] { return weighted_sum(predict(net, x), w); }, 1e-5);
      fd.insert(fd.end(), part.begin(), part.end());
    }
    EXPECT_LT(oracle::relative_error(analytic, fd), 1e-5) << "sizes " << sizes.size();

    // Input gradient as well.
    Matrix xv = x;
    const auto fd_in = oracle::central_differences(xv.values(), [&] { return weighted_sum(predict(net, xv), w); },
                                                   1e-5);
    EXPECT_LT(oracle::relative_error(back.grad_input.values(), fd_in), 1e-5);
  }
}

TEST(Backward, RejectsMismatchedTape) {
  Rng rng(11);
  const std::vector<std::size_t> a{3, 4, 2}, b{3, 5, 2};
  const Mlp net_a = init_mlp(a, rng), net_b = init_mlp(b, rng);
  const auto fwd = forward(net_a, Matrix(2, 3));
  EXPECT_THROW(backward(net_b, fwd.tape, Matrix(2, 2)), DimensionError);
}

TEST(Sgd, ZeroLearningRateLeavesParams) {
  Rng rng(12);
  const std::vector<std::size_t> sizes{3, 4, 2};
  Mlp net = init_mlp(sizes, rng);
  const Mlp before = net;
  Mlp grads = init_mlp(sizes, rng);
  SgdState state{{0.0, 0.9, true, 0.0005}, {}};
  for (int i = 0; i < 3; ++i) sgd_step(net, grads, state);
  EXPECT_EQ(net, before);
}

TEST(Sgd, PlainStepClosedForm) {
  Rng rng(13);
  const std::vector<std::size_t> sizes{2, 3};
  Mlp net = init_mlp(sizes, rng);
  const Mlp grads = init_mlp(sizes, rng);
  const Mlp before = net;
  SgdState state{{0.1, 0.0, false, 0.01}, {}};
  sgd_step(net, grads, state);
  const auto p0 = flatten(before), g = flatten(grads), p1 = flatten(net);
  for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(p1[i], p0[i] - 0.1 * (g[i] + 0.01 * p0[i]), 1e-15);
}

TEST(Sgd, NesterovTwoSteps) {
  const std::vector<std::size_t> sizes{1, 1};
  Mlp net = Mlp::zeros(sizes);
  net.layers[0].weight(0, 0) = 1.0;
  Mlp grads = Mlp::zeros(sizes);
  grads.layers[0].weight(0, 0) = 0.5;
  SgdState state{{0.1, 0.9, true, 0.0}, {}};
  // v1 = 0.5, p1 = 1 - 0.1 (0.5 + 0.45) = 0.905
  sgd_step(net, grads, state);
  EXPECT_NEAR(net.layers[0].weight(0, 0), 0.905, 1e-15);
  // v2 = 0.45 + 0.5 = 0.95, p2 = 0.905 - 0.1 (0.5 + 0.855) = 0.7695
  sgd_step(net, grads, state);
  EXPECT_NEAR(net.layers[0].weight(0, 0), 0.7695, 1e-15);
}

TEST(Adam, FirstStepIsSignTimesLearningRate) {
  Rng rng(14);
  const std::vector<std::size_t> sizes{3, 4};
  Mlp net = init_mlp(sizes, rng);
  Mlp grads = init_mlp(sizes, rng);
  for (auto t : grads.tensors())
    for (double& v : t) v = rng.uniform(0.1, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
  const Mlp before = net;
  AdamState state;
  state.config.learning_rate = 0.01;
  state.config.epsilon = 1e-12;
  adam_step(net, grads, state);
  const auto p0 = flatten(before), g = flatten(grads), p1 = flatten(net);
  for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(p1[i] - p0[i], -0.01 * (g[i] > 0 ? 1 : -1), 1e-10);
  EXPECT_EQ(state.step, 1u);
}

TEST(Optimizers, ShapeMismatchThrows) {
  const std::vector<std::size_t> a{2, 3}, b{2, 4};
  Mlp net = Mlp::zeros(a);
  SgdState sgd;
  AdamState adam;
  EXPECT_THROW(sgd_step(net, Mlp::zeros(b), sgd), DimensionError);
  EXPECT_THROW(adam_step(net, Mlp::zeros(b), adam), DimensionError);
  sgd_step(net, Mlp::zeros(a), sgd);
  Mlp other = Mlp::zeros(b);
  EXPECT_THROW(sgd_step(other, Mlp::zeros(b), sgd), DimensionError);
}

TEST(Training, SeparableDataReachesLowLoss) {
  Rng rng(15);
  const std::size_t n = 200;
  Matrix x(n, 2);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2;
    x(i, 0) = rng.uniform(0.5, 2.0) * (y[i] ? 1 : -1);
    x(i, 1) = rng.uniform(-1, 1);
  }
  const std::vector<std::size_t> sizes{2, 16, 2};
  Mlp net = init_mlp(sizes, rng);
  SgdState state{{0.1, 0.9, true, 0.0}, {}};
  double loss = 0.0;
  for (int step = 0; step < 500; ++step) {
    auto fwd = forward(net, x);
    auto ce = ce_loss_per_sample(fwd.output, y);
    loss = mean(ce.losses);
    for (double& g : ce.grad_logits.values()) g /= static_cast<double>(n);
    sgd_step(net, backward(net, fwd.tape, ce.grad_logits).grads, state);
  }
  EXPECT_LT(loss, 0.01);
}

TEST(Checkpoint, RoundTripIsLossless) {
  Rng rng(16);
  const std::vector<std::size_t> sizes{5, 7, 3};
  Mlp net = init_mlp(sizes, rng);
  net.layers[1].bias[2] = 1.0 / 3.0;
  const auto path = std::filesystem::temp_directory_path() / "selfpaced_ckpt_test.json";
  save_checkpoint(path, {"embedding", net});
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.role, "embedding");
  EXPECT_EQ(back.model, net);
}

TEST(Checkpoint, RejectsMalformed) {
  EXPECT_THROW(checkpoint_from_json("{"), CheckpointError);
  EXPECT_THROW(checkpoint_from_json(R"({"format":"other","version":1})"), CheckpointError);
  EXPECT_THROW(
      checkpoint_from_json(
          R"({"format":"selfpaced-mlp","version":1,"role":"x","layer_sizes":[2,1],"layers":[{"weight":[1],"bias":[0]}]})"),
      CheckpointError);
}

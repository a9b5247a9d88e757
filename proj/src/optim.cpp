#include "selfpaced/optim.hpp"

#include <cmath>
#include <string>

namespace selfpaced {

namespace {

void check_shapes(const Mlp& params, const Mlp& grads, const char* who) {
  if (params.layer_sizes() != grads.layer_sizes()) {
    throw DimensionError(std::string(who) + ": gradient shapes do not match parameter shapes");
  }
}

void ensure_buffers(std::vector<std::vector<double>>& buffers, const Mlp& params, const char* who) {
  const auto tensors = params.tensors();
  if (buffers.empty()) {
    for (auto t : tensors) buffers.emplace_back(t.size(), 0.0);
    return;
  }
  bool ok = buffers.size() == tensors.size();
  for (std::size_t i = 0; ok && i < tensors.size(); ++i) ok = buffers[i].size() == tensors[i].size();
  if (!ok) throw DimensionError(std::string(who) + ": optimizer buffers do not mirror parameter shapes");
}

}  // namespace

void sgd_step(Mlp& params, const Mlp& grads, SgdState& state) {
  check_shapes(params, grads, "sgd_step");
  ensure_buffers(state.velocity, params, "sgd_step");
  const auto& cfg = state.config;
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    auto& vel = state.velocity[t];
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double gi = g[t][i] + cfg.weight_decay * p[t][i];
      if (cfg.momentum == 0.0) {
        p[t][i] -= cfg.learning_rate * gi;
        continue;
      }
      vel[i] = cfg.momentum * vel[i] + gi;
      const double update = cfg.nesterov ? gi + cfg.momentum * vel[i] : vel[i];
      p[t][i] -= cfg.learning_rate * update;
    }
  }
}

void adam_step(Mlp& params, const Mlp& grads, AdamState& state) {
  check_shapes(params, grads, "adam_step");
  ensure_buffers(state.first_moment, params, "adam_step");
  ensure_buffers(state.second_moment, params, "adam_step");
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i] + cfg.weight_decay * p[k][i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[k][i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace selfpaced

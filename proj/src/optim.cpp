#include "ogsf/optim.hpp"

#include <cmath>
#include <string>

#include "ogsf/error.hpp"

namespace ogsf {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig config) : config_(config) {
  if (!(config.learning_rate > 0) || !(config.beta1 > 0 && config.beta1 < 1) ||
      !(config.beta2 > 0 && config.beta2 < 1) || !(config.epsilon > 0)) {
    throw ContractError("adam: hyperparameters out of range");
  }
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.numel(), Real{0});
    v_.emplace_back(p.numel(), Real{0});
  }
}

void adam_step(std::span<Tensor> params, std::span<const std::vector<Real>> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw DimensionError("adam: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.m_.size()) + " moment slots");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].size() != params[p].numel() || state.m_[p].size() != params[p].numel()) {
      throw DimensionError("adam: gradient " + std::to_string(p) + " has " +
                           std::to_string(grads[p].size()) + " entries, parameter has " +
                           std::to_string(params[p].numel()));
    }
  }
  const auto& c = state.config_;
  ++state.step_;
  const auto t = static_cast<Real>(state.step_);
  const Real bias1 = Real{1} - std::pow(c.beta1, t);
  const Real bias2 = Real{1} - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].mutable_values();
    auto& m = state.m_[p];
    auto& v = state.v_[p];
    const auto& g = grads[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = c.beta1 * m[i] + (Real{1} - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (Real{1} - c.beta2) * g[i] * g[i];
      const Real m_hat = m[i] / bias1;
      const Real v_hat = v[i] / bias2;
      values[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_step(std::span<Tensor> params, const Gradients& grads, AdamState& state) {
  std::vector<std::vector<Real>> flat;
  flat.reserve(params.size());
  for (const auto& p : params) flat.push_back(grads.of(p));
  adam_step(params, flat, state);
}

}  // namespace ogsf

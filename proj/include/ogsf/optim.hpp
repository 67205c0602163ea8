#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ogsf/tensor.hpp"

namespace ogsf {

struct AdamConfig {
  Real learning_rate = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

// First/second moment estimates for an ordered parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<const Tensor> params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(Real lr) { config_.learning_rate = lr; }
  std::uint64_t step() const { return step_; }
  std::span<const std::vector<Real>> first_moments() const { return m_; }
  std::span<const std::vector<Real>> second_moments() const { return v_; }

 private:
  friend void adam_step(std::span<Tensor>, std::span<const std::vector<Real>>, AdamState&);
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

// One bias-corrected adaptive-moment update. grads[i] must match params[i].
void adam_step(std::span<Tensor> params, std::span<const std::vector<Real>> grads,
               AdamState& state);
void adam_step(std::span<Tensor> params, const Gradients& grads, AdamState& state);

}  // namespace ogsf

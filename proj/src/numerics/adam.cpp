#include "xltrade/numerics/adam.hpp"

#include <cmath>

namespace xltrade::numerics {

AdamState AdamState::for_params(std::span<const Tensor> params, double alpha, double beta1, double beta2,
                                double epsilon) {
  AdamState state;
  state.alpha = alpha;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0);
    state.second_moment.emplace_back(p.size(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ContractError("adam state tracks a different parameter count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].has_grad()) throw ContractError("adam_step on a parameter without gradient");
    if (state.first_moment[k].size() != params[k].size()) throw ContractError("adam moment shape mismatch");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k].mutable_values();
    auto grad = params[k].grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

void zero_grad(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace xltrade::numerics

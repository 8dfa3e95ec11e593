#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::numerics {

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
  double alpha = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static AdamState for_params(std::span<const Tensor> params, double alpha, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

/// One bias-corrected Adam update of every tensor in `params`, in place.
/// Throws ContractError when a parameter has no gradient or the state does not
/// match the parameter shapes.
void adam_step(std::span<Tensor> params, AdamState& state);

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

void zero_grad(std::span<Tensor> params);

}  // namespace xltrade::numerics

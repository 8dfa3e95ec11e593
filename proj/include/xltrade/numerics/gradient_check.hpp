#pragma once

#include <functional>
#include <span>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::numerics {

/// Compares the reverse-mode gradient of `f` at `x` against central
/// differences with step `h`. Returns max_i |analytic - numeric| / max(1, |analytic|).
/// Throws ContractError if `f` is not scalar-valued or h is outside (0, 1e-3].
double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h);

/// Same check against the leaf tensors `params`, which `loss` reads directly.
/// Parameters are perturbed in place and restored.
double gradient_check(const std::function<Tensor()>& loss, std::span<Tensor> params, double h);

}  // namespace xltrade::numerics

#pragma once

#include <string>

#include "xltrade/numerics/ops.hpp"
#include "xltrade/numerics/random.hpp"

namespace xltrade::xlstm {

using numerics::ParameterList;
using numerics::Rng;
using numerics::Shape;
using numerics::Tensor;

/// Weights feeding one gate: input projection [d, d_in], recurrent projection
/// [d, d] (undefined for gates without hidden recurrence) and bias [d].
struct GateParams {
  Tensor input_weight;
  Tensor recurrent_weight;
  Tensor bias;

  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Affine map x W^T + b; bias may be undefined.
struct Projection {
  Tensor weight;
  Tensor bias;

  static Projection zeros(std::size_t out, std::size_t in);
  static Projection init(std::size_t out, std::size_t in, Rng& rng);
  Tensor operator()(const Tensor& x) const { return numerics::linear(x, weight, bias); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Checks that `x` is [batch, width] and returns the batch extent.
std::size_t require_rows(const Tensor& x, std::size_t width, const char* what);

}  // namespace xltrade::xlstm

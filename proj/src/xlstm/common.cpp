#include "xltrade/xlstm/common.hpp"

#include <cmath>

namespace xltrade::xlstm {

void GateParams::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".input_weight", input_weight});
  if (recurrent_weight.defined()) out.push_back({prefix + ".recurrent_weight", recurrent_weight});
  out.push_back({prefix + ".bias", bias});
}

Projection Projection::zeros(std::size_t out, std::size_t in) {
  return {Tensor::zeros({out, in}, true), Tensor::zeros({out}, true)};
}

Projection Projection::init(std::size_t out, std::size_t in, Rng& rng) {
  return {numerics::uniform_parameter({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng),
          Tensor::zeros({out}, true)};
}

void Projection::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

std::size_t require_rows(const Tensor& x, std::size_t width, const char* what) {
  if (x.rank() != 2 || x.dim(1) != width) {
    throw DimensionError(std::string(what) + " expects [batch, " + std::to_string(width) + "], got " +
                         numerics::shape_string(x.shape()));
  }
  return x.dim(0);
}

}  // namespace xltrade::xlstm

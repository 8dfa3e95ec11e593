#pragma once

#include <random>
#include <vector>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::testing {

inline void scale_parameters(numerics::ParameterList& params, double factor) {
  for (auto& p : params)
    for (double& v : p.tensor.mutable_values()) v *= factor;
}

inline void randomize_parameters(numerics::ParameterList& params, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& p : params)
    for (double& v : p.tensor.mutable_values()) v = dist(rng);
}

inline std::vector<numerics::Tensor> tensors_of(const numerics::ParameterList& params) {
  std::vector<numerics::Tensor> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

inline std::vector<std::vector<double>> random_sequence(std::size_t steps, std::size_t width, std::mt19937_64& rng,
                                                        double bound = 1.0) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<std::vector<double>> seq(steps, std::vector<double>(width));
  for (auto& row : seq)
    for (auto& v : row) v = dist(rng);
  return seq;
}

}  // namespace xltrade::testing

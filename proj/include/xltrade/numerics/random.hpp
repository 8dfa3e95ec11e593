#pragma once

#include <cstdint>
#include <random>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::numerics {

using Rng = std::mt19937_64;

/// Independent, reproducible stream `stream` derived from a run seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Leaf parameter with entries drawn uniformly from [-bound, bound].
inline Tensor uniform_parameter(Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_size(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor(std::move(shape), std::move(values), true);
}

}  // namespace xltrade::numerics

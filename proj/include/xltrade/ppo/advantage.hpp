#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace xltrade::ppo {

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// GAE over one buffer. dones[t] != 0 means the episode ended after step t, so
/// neither the next value nor the next advantage leaks across it.
/// bootstrap_value is v(s_T) for the state following the last step.
Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                              double lambda);

/// In place; only centers when the spread is below 1e-8.
void normalize(std::vector<double>& values);

}  // namespace xltrade::ppo

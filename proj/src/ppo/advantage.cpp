#include "xltrade/ppo/advantage.hpp"

#include <cmath>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::ppo {

Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                              double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ContractError("advantage inputs differ in length");
  if (!(gamma > 0 && gamma <= 1)) throw ContractError("gamma must be in (0, 1]");
  if (!(lambda >= 0 && lambda <= 1)) throw ContractError("lambda must be in [0, 1]");
  Advantages out{std::vector<double>(n), std::vector<double>(n)};
  double next_advantage = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? values[k + 1] : bootstrap_value;
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * not_done * next_value - values[k];
    out.advantages[k] = delta + gamma * lambda * not_done * next_advantage;
    out.returns[k] = out.advantages[k] + values[k];
    next_advantage = out.advantages[k];
  }
  return out;
}

void normalize(std::vector<double>& values) {
  if (values.empty()) return;
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(values.size()));
  for (double& v : values) v = sd < 1e-8 ? v - mean : (v - mean) / sd;
}

}  // namespace xltrade::ppo

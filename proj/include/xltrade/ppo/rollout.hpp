#pragma once

#include <cstdint>
#include <vector>

#include "xltrade/env/trading_env.hpp"
#include "xltrade/policy/policy.hpp"

namespace xltrade::ppo {

struct RolloutBuffer {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> actions;  // as sampled, before the env clamps them
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<std::uint8_t> dones;
  std::vector<std::uint8_t> episode_starts;
  /// Training subsequences [sequence_starts[k], sequence_starts[k+1]); each
  /// starts from snapshots[k] and lies within one episode.
  std::vector<std::size_t> sequence_starts;
  std::vector<policy::RecurrentPolicyState> snapshots;
  double bootstrap_value = 0.0;

  std::size_t size() const { return rewards.size(); }
  std::size_t sequence_end(std::size_t k) const {
    return k + 1 < sequence_starts.size() ? sequence_starts[k + 1] : size();
  }
  /// Reward sums of the episode segments in this buffer.
  std::vector<double> episode_segment_returns() const;
};

/// Carries the live episode across rollouts.
struct RolloutCursor {
  std::vector<double> obs;
  policy::RecurrentPolicyState state;
  bool needs_reset = true;
};

/// Steps `env` for exactly `horizon` sampled actions. The recurrent state is
/// zeroed at each episode start; snapshots are taken at buffer index 0, at
/// episode starts, and every seq_len steps in between.
RolloutBuffer collect_rollout(env::TradingEnv& env, const policy::PolicyConfig& config,
                              const policy::PolicyParams& params, std::size_t horizon, std::size_t seq_len,
                              numerics::Rng& rng, RolloutCursor& cursor);

}  // namespace xltrade::ppo

#include "xltrade/ppo/rollout.hpp"

#include "xltrade/numerics/errors.hpp"

namespace xltrade::ppo {

std::vector<double> RolloutBuffer::episode_segment_returns() const {
  std::vector<double> out;
  for (std::size_t t = 0; t < size(); ++t) {
    if (t == 0 || episode_starts[t]) out.push_back(0.0);
    out.back() += rewards[t];
  }
  return out;
}

RolloutBuffer collect_rollout(env::TradingEnv& env, const policy::PolicyConfig& config,
                              const policy::PolicyParams& params, std::size_t horizon, std::size_t seq_len,
                              numerics::Rng& rng, RolloutCursor& cursor) {
  if (horizon < 1) throw ContractError("rollout horizon must be at least 1");
  if (seq_len < 1) throw ContractError("seq_len must be at least 1");
  if (env.obs_dim() != config.obs_dim || env.n_actions() != config.n_actions) {
    throw DimensionError("environment and policy dimensions differ");
  }
  RolloutBuffer buf;
  std::size_t since_snapshot = 0;
  for (std::size_t t = 0; t < horizon; ++t) {
    const bool episode_start = cursor.needs_reset;
    if (cursor.needs_reset) {
      cursor.obs = env.reset();
      cursor.state = policy::RecurrentPolicyState::zeros(config, 1);
      cursor.needs_reset = false;
    }
    if (t == 0 || episode_start || since_snapshot == seq_len) {
      buf.sequence_starts.push_back(t);
      buf.snapshots.push_back(cursor.state);
      since_snapshot = 0;
    }
    ++since_snapshot;

    auto sample = policy::act(config, params, cursor.state, cursor.obs, &rng, false);
    auto result = env.step(sample.action);
    buf.obs.push_back(std::move(cursor.obs));
    buf.actions.push_back(std::move(sample.action));
    buf.rewards.push_back(result.reward);
    buf.values.push_back(sample.value);
    buf.log_probs.push_back(sample.log_prob);
    buf.dones.push_back(result.done ? 1 : 0);
    buf.episode_starts.push_back(episode_start ? 1 : 0);

    cursor.obs = std::move(result.obs);
    cursor.state = std::move(sample.state);
    cursor.needs_reset = result.done;
  }
  buf.bootstrap_value = cursor.needs_reset ? 0.0 : policy::value_of(config, params, cursor.state, cursor.obs);
  return buf;
}

}  // namespace xltrade::ppo

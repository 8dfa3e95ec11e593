#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xltrade/env/trading_env.hpp"
#include "xltrade/policy/policy.hpp"

namespace xltrade::ppo {

/// Non-finite loss; training stops after writing a diagnostic dump.
class NumericAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.0;
  double clip_range = 0.2;
  double learning_rate = 3e-4;
  std::size_t batch_size = 32;  // timesteps per minibatch, at least
  std::size_t seq_len = 0;      // 0 = the environment's window
  std::size_t epochs = 10;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  std::size_t total_timesteps = 0;
  std::size_t horizon = 0;  // 0 = one full episode per update
  bool normalize_advantages = true;
  std::uint64_t seed = 0;
  std::filesystem::path dump_path;  // where a NaN abort writes its batch; empty = no file

  void validate() const;
};

struct UpdateStats {
  std::size_t update = 0;
  std::size_t timesteps = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
  double mean_episode_return = 0;
  std::size_t skipped_minibatches = 0;

  std::string to_json_line() const;
};

struct TrainResult {
  policy::PolicyParams params;
  std::vector<UpdateStats> history;
};

/// Recurrent PPO. Rollout sampling and minibatch shuffling draw from streams
/// derived from config.seed, so a fixed seed reproduces the history exactly.
TrainResult train(const TrainConfig& config, env::TradingEnv& env, const policy::PolicyConfig& policy_config,
                  const policy::PolicyParams& initial,
                  const std::function<void(const UpdateStats&)>& on_update = {});

/// Groups shuffled sequence indices so each group covers at least batch_size steps.
std::vector<std::vector<std::size_t>> plan_minibatches(const std::vector<std::size_t>& lengths,
                                                       std::size_t batch_size, numerics::Rng& rng);

}  // namespace xltrade::ppo

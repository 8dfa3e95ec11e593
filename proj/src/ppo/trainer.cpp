#include "xltrade/ppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "xltrade/numerics/adam.hpp"
#include "xltrade/numerics/errors.hpp"
#include "xltrade/ppo/advantage.hpp"
#include "xltrade/ppo/loss.hpp"
#include "xltrade/ppo/rollout.hpp"

namespace xltrade::ppo {

void TrainConfig::validate() const {
  if (!(gamma > 0 && gamma <= 1)) throw ContractError("gamma must be in (0, 1]");
  if (!(gae_lambda >= 0 && gae_lambda <= 1)) throw ContractError("gae_lambda must be in [0, 1]");
  if (!(clip_range > 0)) throw ContractError("clip_range must be positive");
  if (!(learning_rate >= 0)) throw ContractError("learning_rate must be nonnegative");
  if (batch_size < 1) throw ContractError("batch_size must be at least 1");
  if (epochs < 1) throw ContractError("epochs must be at least 1");
  if (!(max_grad_norm > 0)) throw ContractError("max_grad_norm must be positive");
}

std::string UpdateStats::to_json_line() const {
  nlohmann::ordered_json j;
  j["update"] = update;
  j["timesteps"] = timesteps;
  j["policy_loss"] = policy_loss;
  j["value_loss"] = value_loss;
  j["entropy"] = entropy;
  j["clip_fraction"] = clip_fraction;
  j["mean_episode_return"] = mean_episode_return;
  j["skipped_minibatches"] = skipped_minibatches;
  return j.dump();
}

std::vector<std::vector<std::size_t>> plan_minibatches(const std::vector<std::size_t>& lengths,
                                                       std::size_t batch_size, numerics::Rng& rng) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with explicit draws; std::shuffle is not specified across library versions.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> current;
  std::size_t steps = 0;
  for (std::size_t k : order) {
    current.push_back(k);
    steps += lengths[k];
    if (steps >= batch_size) {
      groups.push_back(std::move(current));
      current.clear();
      steps = 0;
    }
  }
  if (!current.empty()) {
    if (groups.empty()) {
      groups.push_back(std::move(current));
    } else {
      groups.back().insert(groups.back().end(), current.begin(), current.end());
    }
  }
  return groups;
}

namespace {

void write_dump(const std::filesystem::path& path, const std::string& reason, std::size_t update,
                const RolloutBuffer& buffer, const std::vector<std::size_t>& sequences,
                const std::vector<double>& advantages, const std::vector<double>& returns) {
  if (path.empty()) return;
  nlohmann::ordered_json j;
  j["reason"] = reason;
  j["update"] = update;
  j["sequences"] = nlohmann::ordered_json::array();
  for (std::size_t k : sequences) {
    nlohmann::ordered_json seq;
    const std::size_t start = buffer.sequence_starts[k];
    seq["start"] = start;
    for (std::size_t i = start; i < buffer.sequence_end(k); ++i) {
      seq["obs"].push_back(buffer.obs[i]);
      seq["actions"].push_back(buffer.actions[i]);
      seq["old_log_probs"].push_back(buffer.log_probs[i]);
      seq["advantages"].push_back(advantages[i]);
      seq["returns"].push_back(returns[i]);
    }
    j["sequences"].push_back(std::move(seq));
  }
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(1) << '\n';
}

}  // namespace

TrainResult train(const TrainConfig& config, env::TradingEnv& env, const policy::PolicyConfig& policy_config,
                  const policy::PolicyParams& initial, const std::function<void(const UpdateStats&)>& on_update) {
  config.validate();
  policy_config.validate();
  const std::size_t seq_len = config.seq_len ? config.seq_len : env.config().window;
  const std::size_t horizon = config.horizon ? config.horizon : env.episode_length();

  // Train on a private copy so the caller's parameters stay untouched.
  TrainResult result{policy::PolicyParams::zeros(policy_config), {}};
  {
    auto src = initial.named(policy_config);
    auto dst = result.params.named(policy_config);
    for (std::size_t i = 0; i < src.size(); ++i) {
      auto values = dst[i].tensor.mutable_values();
      const auto from = src[i].tensor.values();
      std::copy(from.begin(), from.end(), values.begin());
    }
  }
  auto& params = result.params;
  std::vector<numerics::Tensor> tensors = params.tensors(policy_config);
  auto adam = numerics::AdamState::for_params(tensors, config.learning_rate);
  numerics::Rng rollout_rng = numerics::make_rng(config.seed, 1);
  numerics::Rng shuffle_rng = numerics::make_rng(config.seed, 2);
  RolloutCursor cursor;

  std::size_t timesteps = 0;
  std::size_t update = 0;
  while (timesteps < config.total_timesteps) {
    const std::size_t steps = std::min(horizon, config.total_timesteps - timesteps);
    const RolloutBuffer buffer =
        collect_rollout(env, policy_config, params, steps, seq_len, rollout_rng, cursor);
    timesteps += buffer.size();

    auto adv = compute_advantages(buffer.rewards, buffer.values, buffer.dones, buffer.bootstrap_value, config.gamma,
                                  config.gae_lambda);
    std::vector<double> advantages = adv.advantages;
    if (config.normalize_advantages) normalize(advantages);

    std::vector<std::size_t> lengths;
    for (std::size_t k = 0; k < buffer.sequence_starts.size(); ++k) {
      lengths.push_back(buffer.sequence_end(k) - buffer.sequence_starts[k]);
    }

    UpdateStats stats;
    stats.update = ++update;
    double policy_sum = 0, value_sum = 0, entropy_sum = 0, clip_sum = 0;
    std::size_t done_batches = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (const auto& group : plan_minibatches(lengths, config.batch_size, shuffle_rng)) {
        LossTerms terms;
        try {
          const Minibatch batch = make_minibatch(buffer, group, advantages, adv.returns);
          terms = ppo_loss(batch, policy_config, params, config.clip_range, config.value_coef, config.entropy_coef);
        } catch (const TrainingError&) {
          ++stats.skipped_minibatches;
          continue;
        } catch (const NonFiniteError& e) {
          write_dump(config.dump_path, e.what(), update, buffer, group, advantages, adv.returns);
          throw NumericAbort(std::string("non-finite loss at update ") + std::to_string(update) + ": " + e.what());
        }
        numerics::zero_grad(tensors);
        try {
          terms.loss.backward();
        } catch (const NonFiniteError& e) {
          write_dump(config.dump_path, e.what(), update, buffer, group, advantages, adv.returns);
          throw NumericAbort(std::string("non-finite gradient at update ") + std::to_string(update) + ": " +
                             e.what());
        }
        numerics::clip_grad_norm(tensors, config.max_grad_norm);
        numerics::adam_step(tensors, adam);
        policy_sum += terms.policy_loss;
        value_sum += terms.value_loss;
        entropy_sum += terms.entropy;
        clip_sum += terms.clip_fraction;
        ++done_batches;
      }
    }
    if (done_batches > 0) {
      const auto n = static_cast<double>(done_batches);
      stats.policy_loss = policy_sum / n;
      stats.value_loss = value_sum / n;
      stats.entropy = entropy_sum / n;
      stats.clip_fraction = clip_sum / n;
    } else {
      stats.entropy = policy::gaussian_entropy(params.log_std.values());
    }
    const auto segments = buffer.episode_segment_returns();
    stats.mean_episode_return = std::accumulate(segments.begin(), segments.end(), 0.0) /
                                static_cast<double>(segments.size());
    stats.timesteps = timesteps;
    result.history.push_back(stats);
    if (on_update) on_update(stats);
  }
  return result;
}

}  // namespace xltrade::ppo

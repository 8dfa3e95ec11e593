#include "xltrade/policy/policy.hpp"

#include <cmath>

namespace xltrade::policy {

using namespace numerics;

std::string to_string(ModelKind kind) { return kind == ModelKind::kXlstm ? "xlstm" : "lstm"; }

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "xlstm") return ModelKind::kXlstm;
  if (name == "lstm") return ModelKind::kLstm;
  throw ContractError("unknown model kind '" + name + "'");
}

void PolicyConfig::validate() const {
  if (obs_dim == 0 || n_actions == 0) throw ContractError("policy needs positive obs_dim and n_actions");
  stack.validate();
}

namespace {

constexpr double kActorHeadScale = 0.01;

TowerParams make_tower(const PolicyConfig& config, std::size_t outputs, double head_scale, Rng* rng) {
  const std::size_t e = config.embedding_dim();
  TowerParams t;
  if (rng) {
    t.feature_hidden = Projection::init(e, config.obs_dim, *rng);
    t.feature_out = Projection::init(e, e, *rng);
    if (config.kind == ModelKind::kXlstm) {
      t.stack = xlstm::BlockStackParams::init(config.stack, *rng);
    } else {
      t.lstm = xlstm::LstmParams::init(e, e, *rng);
    }
    t.head = Projection::init(outputs, e, *rng);
    for (double& w : t.head.weight.mutable_values()) w *= head_scale;
  } else {
    t.feature_hidden = Projection::zeros(e, config.obs_dim);
    t.feature_out = Projection::zeros(e, e);
    if (config.kind == ModelKind::kXlstm) {
      t.stack = xlstm::BlockStackParams::zeros(config.stack);
    } else {
      t.lstm = xlstm::LstmParams::zeros(e, e);
    }
    t.head = Projection::zeros(outputs, e);
  }
  return t;
}

std::vector<LayerState> zero_tower_states(const PolicyConfig& config, std::size_t batch) {
  if (config.kind == ModelKind::kXlstm) return xlstm::zero_states(config.stack, batch);
  return {xlstm::LstmState::zeros(batch, config.embedding_dim())};
}

struct TowerOutput {
  Tensor output;
  std::vector<LayerState> states;
};

TowerOutput tower_step(const PolicyConfig& config, const TowerParams& tower, const std::vector<LayerState>& states,
                       const Tensor& obs) {
  const Tensor features = tower.feature_out(gelu(tower.feature_hidden(obs)));
  TowerOutput out;
  Tensor core;
  if (config.kind == ModelKind::kXlstm) {
    auto step = xlstm::stack_step(config.stack, tower.stack, states, features);
    core = step.output;
    out.states = std::move(step.states);
  } else {
    const auto* lstm_state = states.size() == 1 ? std::get_if<xlstm::LstmState>(&states[0]) : nullptr;
    if (!lstm_state) throw ContractError("LSTM policy expects exactly one LSTM state per tower");
    auto step = xlstm::lstm_step(tower.lstm, *lstm_state, features);
    core = step.hidden;
    out.states.emplace_back(std::move(step.state));
  }
  out.output = tower.head(core);
  return out;
}

Tensor obs_row(const PolicyConfig& config, std::span<const double> obs) {
  if (obs.size() != config.obs_dim) {
    throw DimensionError("observation has " + std::to_string(obs.size()) + " entries, policy expects " +
                         std::to_string(config.obs_dim));
  }
  return Tensor({1, obs.size()}, std::vector<double>(obs.begin(), obs.end()));
}

// Mirrors gaussian_log_prob operation for operation so both agree bitwise.
Tensor log_prob_tensor(const Tensor& mean, const Tensor& log_std, const Tensor& action) {
  const Tensor z = div(sub(action, mean), exp(log_std));
  const Tensor base = add(neg(log_std), -kHalfLog2Pi);
  return sum_last(sub(base, mul(mul(z, z), 0.5)));
}

Tensor entropy_tensor(const Tensor& log_std) { return sum(add(log_std, kHalfLog2PiE)); }

}  // namespace

void TowerParams::collect(const std::string& prefix, ModelKind kind, ParameterList& out) const {
  feature_hidden.collect(prefix + ".feature.hidden", out);
  feature_out.collect(prefix + ".feature.out", out);
  if (kind == ModelKind::kXlstm) {
    stack.collect(prefix + ".stack", out);
  } else {
    lstm.collect(prefix + ".lstm", out);
  }
  head.collect(prefix + ".head", out);
}

PolicyParams PolicyParams::init(const PolicyConfig& config, Rng& rng) {
  config.validate();
  PolicyParams p;
  p.actor = make_tower(config, config.n_actions, kActorHeadScale, &rng);
  p.critic = make_tower(config, 1, 1.0, &rng);
  p.log_std = Tensor::zeros({config.n_actions}, true);
  return p;
}

PolicyParams PolicyParams::zeros(const PolicyConfig& config) {
  config.validate();
  PolicyParams p;
  p.actor = make_tower(config, config.n_actions, 1.0, nullptr);
  p.critic = make_tower(config, 1, 1.0, nullptr);
  p.log_std = Tensor::zeros({config.n_actions}, true);
  return p;
}

ParameterList PolicyParams::named(const PolicyConfig& config) const {
  ParameterList out;
  actor.collect("actor", config.kind, out);
  critic.collect("critic", config.kind, out);
  out.push_back({"log_std", log_std});
  return out;
}

std::vector<Tensor> PolicyParams::tensors(const PolicyConfig& config) const {
  std::vector<Tensor> out;
  for (auto& p : named(config)) out.push_back(p.tensor);
  return out;
}

RecurrentPolicyState RecurrentPolicyState::zeros(const PolicyConfig& config, std::size_t batch) {
  return {zero_tower_states(config, batch), zero_tower_states(config, batch)};
}

RecurrentPolicyState detach(const RecurrentPolicyState& state) {
  RecurrentPolicyState out;
  for (const auto& s : state.actor) out.actor.push_back(xlstm::detach(s));
  for (const auto& s : state.critic) out.critic.push_back(xlstm::detach(s));
  return out;
}

RecurrentPolicyState stack_batch(const std::vector<const RecurrentPolicyState*>& rows) {
  if (rows.empty()) throw ContractError("stack_batch of zero policy states");
  RecurrentPolicyState out;
  auto merge = [&](auto member, std::vector<LayerState>& dst) {
    const std::size_t layers = ((*rows.front()).*member).size();
    for (std::size_t k = 0; k < layers; ++k) {
      std::vector<const LayerState*> layer;
      for (const auto* r : rows) {
        if (((*r).*member).size() != layers) throw ContractError("policy states differ in layer count");
        layer.push_back(&((*r).*member)[k]);
      }
      dst.push_back(xlstm::stack_batch(layer));
    }
  };
  merge(&RecurrentPolicyState::actor, out.actor);
  merge(&RecurrentPolicyState::critic, out.critic);
  return out;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw DimensionError("gaussian_log_prob operand lengths differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) / std::exp(log_std[i]);
    total += (-log_std[i] - kHalfLog2Pi) - (z * z) * 0.5;
  }
  return total;
}

double gaussian_entropy(std::span<const double> log_std) {
  double total = 0.0;
  for (double s : log_std) total += s + kHalfLog2PiE;
  return total;
}

ActionSample act(const PolicyConfig& config, const PolicyParams& params, const RecurrentPolicyState& state,
                 std::span<const double> obs, Rng* rng, bool deterministic) {
  NoGradGuard no_grad;
  const Tensor x = obs_row(config, obs);
  auto actor = tower_step(config, params.actor, state.actor, x);
  auto critic = tower_step(config, params.critic, state.critic, x);

  ActionSample sample;
  sample.mean.assign(actor.output.values().begin(), actor.output.values().end());
  sample.value = critic.output.item();
  const auto log_std = params.log_std.values();
  if (deterministic) {
    sample.action = sample.mean;
  } else {
    if (!rng) throw ContractError("stochastic act needs a random generator");
    std::normal_distribution<double> normal(0.0, 1.0);
    sample.action.resize(sample.mean.size());
    for (std::size_t i = 0; i < sample.mean.size(); ++i) {
      sample.action[i] = sample.mean[i] + std::exp(log_std[i]) * normal(*rng);
    }
  }
  sample.log_prob = gaussian_log_prob(sample.mean, log_std, sample.action);
  sample.state = {std::move(actor.states), std::move(critic.states)};
  return sample;
}

double value_of(const PolicyConfig& config, const PolicyParams& params, const RecurrentPolicyState& state,
                std::span<const double> obs) {
  NoGradGuard no_grad;
  return tower_step(config, params.critic, state.critic, obs_row(config, obs)).output.item();
}

BatchEvaluation evaluate_batch(const PolicyConfig& config, const PolicyParams& params,
                               const RecurrentPolicyState& initial, const std::vector<Tensor>& obs_steps,
                               const std::vector<Tensor>& action_steps) {
  if (obs_steps.empty()) throw ContractError("evaluate_batch on an empty sequence");
  if (obs_steps.size() != action_steps.size()) throw ContractError("observation and action sequences differ in length");
  BatchEvaluation out;
  auto actor_states = initial.actor;
  auto critic_states = initial.critic;
  for (std::size_t t = 0; t < obs_steps.size(); ++t) {
    const std::size_t batch = obs_steps[t].dim(0);
    if (obs_steps[t].shape() != Shape{batch, config.obs_dim} ||
        action_steps[t].shape() != Shape{batch, config.n_actions}) {
      throw DimensionError("evaluate_batch step " + std::to_string(t) + " has mismatched shapes");
    }
    auto actor = tower_step(config, params.actor, actor_states, obs_steps[t]);
    auto critic = tower_step(config, params.critic, critic_states, obs_steps[t]);
    out.log_probs.push_back(log_prob_tensor(actor.output, params.log_std, action_steps[t]));
    out.values.push_back(reshape(critic.output, {batch}));
    actor_states = std::move(actor.states);
    critic_states = std::move(critic.states);
  }
  out.entropy = entropy_tensor(params.log_std);
  return out;
}

SequenceEvaluation evaluate_sequence(const PolicyConfig& config, const PolicyParams& params,
                                     const RecurrentPolicyState& initial,
                                     const std::vector<std::vector<double>>& obs,
                                     const std::vector<std::vector<double>>& actions) {
  if (obs.size() != actions.size()) throw ContractError("observation and action sequences differ in length");
  std::vector<Tensor> obs_steps, action_steps;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    obs_steps.push_back(obs_row(config, obs[t]));
    if (actions[t].size() != config.n_actions) throw DimensionError("action width mismatch");
    action_steps.push_back(Tensor({1, actions[t].size()}, actions[t]));
  }
  auto batch = evaluate_batch(config, params, initial, obs_steps, action_steps);
  // Entropy is state independent, so the mean over steps is the closed form itself.
  return {concat(batch.log_probs), concat(batch.values), batch.entropy};
}

}  // namespace xltrade::policy

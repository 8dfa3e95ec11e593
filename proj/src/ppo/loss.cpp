#include "xltrade/ppo/loss.hpp"

#include <cmath>

#include "xltrade/numerics/errors.hpp"
#include "xltrade/numerics/ops.hpp"

namespace xltrade::ppo {

using numerics::Shape;
using numerics::Tensor;

Minibatch make_minibatch(const RolloutBuffer& buffer, const std::vector<std::size_t>& sequences,
                         const std::vector<double>& advantages, const std::vector<double>& returns) {
  if (sequences.empty()) throw ContractError("minibatch needs at least one sequence");
  if (advantages.size() != buffer.size() || returns.size() != buffer.size()) {
    throw ContractError("advantages and returns must match the buffer length");
  }
  Minibatch mb;
  mb.sequences = sequences;
  std::size_t longest = 0;
  std::vector<const policy::RecurrentPolicyState*> snapshots;
  for (std::size_t k : sequences) {
    if (k >= buffer.sequence_starts.size()) throw ContractError("sequence index out of range");
    const std::size_t len = buffer.sequence_end(k) - buffer.sequence_starts[k];
    longest = std::max(longest, len);
    mb.valid_steps += len;
    snapshots.push_back(&buffer.snapshots[k]);
  }
  mb.initial = policy::stack_batch(snapshots);

  const std::size_t b = sequences.size();
  const std::size_t obs_dim = buffer.obs.front().size();
  const std::size_t n_actions = buffer.actions.front().size();
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<double> obs, act, lp(b), adv(b), ret(b), mask(b);
    obs.reserve(b * obs_dim);
    act.reserve(b * n_actions);
    for (std::size_t r = 0; r < b; ++r) {
      const std::size_t start = buffer.sequence_starts[sequences[r]];
      const std::size_t end = buffer.sequence_end(sequences[r]);
      const bool valid = start + t < end;
      const std::size_t i = valid ? start + t : end - 1;
      obs.insert(obs.end(), buffer.obs[i].begin(), buffer.obs[i].end());
      act.insert(act.end(), buffer.actions[i].begin(), buffer.actions[i].end());
      lp[r] = buffer.log_probs[i];
      adv[r] = advantages[i];
      ret[r] = returns[i];
      mask[r] = valid ? 1.0 : 0.0;
    }
    mb.obs.emplace_back(Shape{b, obs_dim}, std::move(obs));
    mb.actions.emplace_back(Shape{b, n_actions}, std::move(act));
    mb.old_log_probs.emplace_back(Shape{b}, std::move(lp));
    mb.advantages.emplace_back(Shape{b}, std::move(adv));
    mb.returns.emplace_back(Shape{b}, std::move(ret));
    mb.mask.emplace_back(Shape{b}, std::move(mask));
  }
  return mb;
}

SurrogateTerms clipped_surrogate(const Tensor& new_log_prob, const Tensor& old_log_prob, const Tensor& advantage,
                                 const Tensor& mask, double clip_range) {
  if (!(clip_range > 0)) throw ContractError("clip range must be positive");
  const std::size_t n = new_log_prob.size();
  if (old_log_prob.size() != n || advantage.size() != n || mask.size() != n) {
    throw DimensionError("surrogate inputs differ in length");
  }
  Tensor ratio;
  try {
    ratio = exp(sub(new_log_prob, old_log_prob));
  } catch (const NonFiniteError& e) {
    throw TrainingError(std::string("probability ratio is not finite: ") + e.what());
  }
  const Tensor unclipped = mul(ratio, advantage);
  const Tensor clipped = mul(clamp(ratio, 1.0 - clip_range, 1.0 + clip_range), advantage);
  const double count = sum(mask).item();
  if (!(count > 0)) throw ContractError("surrogate mask selects no samples");
  SurrogateTerms out;
  out.objective = mul(sum(mul(min_with(unclipped, clipped), mask)), 1.0 / count);
  double clipped_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0 && std::abs(ratio[i] - 1.0) > clip_range) clipped_count += 1;
  }
  out.clip_fraction = clipped_count / count;
  return out;
}

LossTerms ppo_loss(const Minibatch& batch, const policy::PolicyConfig& config, const policy::PolicyParams& params,
                   double clip_range, double value_coef, double entropy_coef) {
  const auto eval = policy::evaluate_batch(config, params, batch.initial, batch.obs, batch.actions);
  const Tensor new_lp = concat(eval.log_probs);
  const Tensor values = concat(eval.values);
  const Tensor mask = concat(batch.mask);
  const auto surrogate =
      clipped_surrogate(new_lp, concat(batch.old_log_probs), concat(batch.advantages), mask, clip_range);
  const double count = sum(mask).item();
  const Tensor err = sub(values, concat(batch.returns));
  const Tensor value_loss = mul(sum(mul(mul(err, err), mask)), 1.0 / count);

  LossTerms out;
  out.loss = add(sub(mul(value_loss, value_coef), surrogate.objective), mul(eval.entropy, -entropy_coef));
  out.policy_loss = -surrogate.objective.item();
  out.value_loss = value_loss.item();
  out.entropy = eval.entropy.item();
  out.clip_fraction = surrogate.clip_fraction;
  return out;
}

}  // namespace xltrade::ppo

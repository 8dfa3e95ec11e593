#pragma once

#include <stdexcept>
#include <vector>

#include "xltrade/policy/policy.hpp"
#include "xltrade/ppo/rollout.hpp"

namespace xltrade::ppo {

/// A minibatch step could not be evaluated (non-finite probability ratio).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lockstep batch of subsequences padded to a common length. Every per-step
/// tensor is [batch]; padded cells have mask 0.
struct Minibatch {
  policy::RecurrentPolicyState initial;
  std::vector<numerics::Tensor> obs;      // [batch, obs_dim]
  std::vector<numerics::Tensor> actions;  // [batch, n_actions]
  std::vector<numerics::Tensor> old_log_probs;
  std::vector<numerics::Tensor> advantages;
  std::vector<numerics::Tensor> returns;
  std::vector<numerics::Tensor> mask;
  std::vector<std::size_t> sequences;  // indices into the buffer's sequence list
  std::size_t valid_steps = 0;
};

/// Gathers the listed subsequences of `buffer`, padding short ones by repeating
/// their last step.
Minibatch make_minibatch(const RolloutBuffer& buffer, const std::vector<std::size_t>& sequences,
                         const std::vector<double>& advantages, const std::vector<double>& returns);

struct SurrogateTerms {
  numerics::Tensor objective;  // masked mean of min(rho A, clip(rho) A), to be maximized
  double clip_fraction = 0;
};

/// All arguments are flat [n]. Throws TrainingError if rho is not finite.
SurrogateTerms clipped_surrogate(const numerics::Tensor& new_log_prob, const numerics::Tensor& old_log_prob,
                                 const numerics::Tensor& advantage, const numerics::Tensor& mask, double clip_range);

struct LossTerms {
  numerics::Tensor loss;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
};

/// -surrogate + value_coef * masked MSE(v, returns) - entropy_coef * entropy.
LossTerms ppo_loss(const Minibatch& batch, const policy::PolicyConfig& config, const policy::PolicyParams& params,
                   double clip_range, double value_coef, double entropy_coef);

}  // namespace xltrade::ppo

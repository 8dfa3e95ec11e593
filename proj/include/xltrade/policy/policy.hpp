#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "xltrade/xlstm/block_stack.hpp"

namespace xltrade::policy {

using numerics::ParameterList;
using numerics::Rng;
using numerics::Tensor;
using xlstm::LayerState;
using xlstm::Projection;

inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
inline const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

enum class ModelKind { kXlstm, kLstm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct PolicyConfig {
  std::size_t obs_dim = 0;
  std::size_t n_actions = 0;
  ModelKind kind = ModelKind::kXlstm;
  /// Width of the feature extractor and of the recurrent core for both kinds.
  xlstm::BlockStackConfig stack;

  void validate() const;
  std::size_t embedding_dim() const { return stack.embedding_dim; }
};

/// One tower: obs -> GeLU MLP feature extractor -> recurrent core -> head.
/// Only one of `stack` / `lstm` is populated, depending on the model kind.
struct TowerParams {
  Projection feature_hidden;
  Projection feature_out;
  xlstm::BlockStackParams stack;
  xlstm::LstmParams lstm;
  Projection head;

  void collect(const std::string& prefix, ModelKind kind, ParameterList& out) const;
};

/// Actor and critic towers share no tensors.
struct PolicyParams {
  TowerParams actor;
  TowerParams critic;
  Tensor log_std;  // [n_actions], state independent

  static PolicyParams init(const PolicyConfig& config, Rng& rng);
  static PolicyParams zeros(const PolicyConfig& config);

  /// Checkpoint names ("actor.*", "critic.*", "log_std") in a fixed order.
  ParameterList named(const PolicyConfig& config) const;
  std::vector<Tensor> tensors(const PolicyConfig& config) const;
};

struct RecurrentPolicyState {
  std::vector<LayerState> actor;
  std::vector<LayerState> critic;

  static RecurrentPolicyState zeros(const PolicyConfig& config, std::size_t batch);
};

RecurrentPolicyState detach(const RecurrentPolicyState& state);
/// Concatenates B=1 (or larger) states along the batch axis.
RecurrentPolicyState stack_batch(const std::vector<const RecurrentPolicyState*>& rows);

struct ActionSample {
  std::vector<double> action;  // unclipped
  std::vector<double> mean;
  double log_prob = 0.0;
  double value = 0.0;
  RecurrentPolicyState state;
};

/// Diagonal Gaussian log density:
///   sum_i  (-log_std_i - log(2 pi)/2) - ((a_i - mean_i) / exp(log_std_i))^2 / 2
double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);
/// sum_i log_std_i + log(2 pi e)/2.
double gaussian_entropy(std::span<const double> log_std);

/// One policy step for a single observation. Deterministic mode returns the
/// mean as the action; otherwise `rng` must be non-null.
ActionSample act(const PolicyConfig& config, const PolicyParams& params, const RecurrentPolicyState& state,
                 std::span<const double> obs, Rng* rng, bool deterministic);

/// Critic value of `obs` only (used for bootstrapping).
double value_of(const PolicyConfig& config, const PolicyParams& params, const RecurrentPolicyState& state,
                std::span<const double> obs);

struct BatchEvaluation {
  std::vector<Tensor> log_probs;  // per step, [batch]
  std::vector<Tensor> values;     // per step, [batch]
  Tensor entropy;                 // scalar
};

/// Replays both towers over `obs_steps` ([batch, obs_dim] each) from
/// `initial`, recording the graph for training.
BatchEvaluation evaluate_batch(const PolicyConfig& config, const PolicyParams& params,
                               const RecurrentPolicyState& initial, const std::vector<Tensor>& obs_steps,
                               const std::vector<Tensor>& action_steps);

struct SequenceEvaluation {
  Tensor log_probs;  // [T]
  Tensor values;     // [T]
  Tensor entropy;    // scalar, mean over steps
};

SequenceEvaluation evaluate_sequence(const PolicyConfig& config, const PolicyParams& params,
                                     const RecurrentPolicyState& initial,
                                     const std::vector<std::vector<double>>& obs,
                                     const std::vector<std::vector<double>>& actions);

}  // namespace xltrade::policy

#pragma once

#include <variant>
#include <vector>

#include "xltrade/xlstm/lstm.hpp"
#include "xltrade/xlstm/mlstm.hpp"
#include "xltrade/xlstm/slstm.hpp"

namespace xltrade::xlstm {

enum class CellKind { kSLstm, kMLstm };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& name);

struct BlockStackConfig {
  std::size_t embedding_dim = 128;
  std::vector<CellKind> layers{CellKind::kMLstm, CellKind::kSLstm};
  std::size_t n_heads = 1;
  double mlp_expansion = 2.0;
  double layernorm_eps = 1e-5;

  /// Throws ContractError unless embedding_dim % n_heads == 0 and there is
  /// at least one layer.
  void validate() const;
  std::size_t mlp_dim() const;
};

/// Pre-norm residual block:
///   u = x + cell(norm1(x)),  y = u + down(gelu(up(norm2(u)))).
struct BlockParams {
  CellKind kind = CellKind::kMLstm;
  Tensor norm1_scale, norm1_shift;
  std::variant<SLstmParams, MLstmParams> cell;
  Tensor norm2_scale, norm2_shift;
  Projection up;
  Projection down;
};

struct BlockStackParams {
  std::vector<BlockParams> blocks;

  /// Every weight and bias zero, norm scales one.
  static BlockStackParams zeros(const BlockStackConfig& config);
  static BlockStackParams init(const BlockStackConfig& config, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Recurrent state of one layer of either tower. The stack uses the sLSTM and
/// mLSTM alternatives; the LSTM baseline uses LstmState.
using LayerState = std::variant<SLstmState, MLstmState, LstmState>;

std::vector<LayerState> zero_states(const BlockStackConfig& config, std::size_t batch);

/// Constant copies of every tensor in `state`.
LayerState detach(const LayerState& state);
/// Concatenates same-kind states along the batch axis (constants only).
LayerState stack_batch(const std::vector<const LayerState*>& rows);
/// Batch extent of a state.
std::size_t batch_size(const LayerState& state);

struct StackOutput {
  Tensor output;
  std::vector<LayerState> states;
};

/// Advances every block by one step. `x` is [batch, embedding_dim]; the input
/// states are left untouched and fresh states are returned.
StackOutput stack_step(const BlockStackConfig& config, const BlockStackParams& params,
                       const std::vector<LayerState>& states, const Tensor& x);

}  // namespace xltrade::xlstm

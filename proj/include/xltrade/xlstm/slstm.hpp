#pragma once

#include "xltrade/xlstm/common.hpp"

namespace xltrade::xlstm {

/// sLSTM weights. Recurrent matrices are block-diagonal over `n_heads`
/// (memory mixing happens within a head only).
struct SLstmParams {
  GateParams candidate;
  GateParams input_gate;
  GateParams forget_gate;
  GateParams output_gate;
  std::size_t n_heads = 1;
  Tensor recurrent_mask;  // constant 0/1 block mask, undefined for one head

  static SLstmParams zeros(std::size_t hidden, std::size_t input, std::size_t n_heads = 1);
  /// Weights uniform in +-1/sqrt(fan_in); forget bias +1, other biases 0.
  static SLstmParams init(std::size_t hidden, std::size_t input, std::size_t n_heads, Rng& rng);

  std::size_t hidden_dim() const { return candidate.bias.dim(0); }
  std::size_t input_dim() const { return candidate.input_weight.dim(1); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Per-row state, each tensor [batch, hidden]. `stabilizer` is log-domain.
struct SLstmState {
  Tensor hidden;
  Tensor cell;
  Tensor normalizer;
  Tensor stabilizer;

  static SLstmState zeros(std::size_t batch, std::size_t hidden);
};

struct SLstmOutput {
  Tensor hidden;
  SLstmState state;
};

/// One stabilized sLSTM step for x of shape [batch, input].
///
///   z = tanh(W_z x + R_z h + b_z),  o = sigmoid(...)
///   m' = max(f~ + m, i~),  i = exp(i~ - m'),  f = exp(f~ + m - m')
///   c' = f c + i z,  n' = f n + i,  h' = o c' / n'
///
/// The stabilizer rescales c and n by the same factor, so h' equals the
/// unstabilized recurrence with i = exp(i~), f = exp(f~).
SLstmOutput slstm_step(const SLstmParams& params, const SLstmState& state, const Tensor& x);

}  // namespace xltrade::xlstm

#pragma once

#include "xltrade/xlstm/common.hpp"

namespace xltrade::xlstm {

/// mLSTM weights. Input and forget gates are one scalar per head; the output
/// gate is a full vector. No hidden-to-hidden recurrence.
struct MLstmParams {
  Projection query;        // [d, d_in]
  Projection key;          // [d, d_in]
  Projection value;        // [d, d_in]
  Projection input_gate;   // [n_heads, d_in]
  Projection forget_gate;  // [n_heads, d_in]
  Projection output_gate;  // [d, d_in]
  std::size_t n_heads = 1;

  static MLstmParams zeros(std::size_t hidden, std::size_t input, std::size_t n_heads = 1);
  static MLstmParams init(std::size_t hidden, std::size_t input, std::size_t n_heads, Rng& rng);

  std::size_t hidden_dim() const { return query.weight.dim(0); }
  std::size_t input_dim() const { return query.weight.dim(1); }
  std::size_t head_dim() const { return hidden_dim() / n_heads; }
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// memory [batch, heads, dh, dh], normalizer [batch, heads, dh],
/// stabilizer [batch, heads]. Memory and normalizer are stored scaled by
/// exp(-stabilizer).
struct MLstmState {
  Tensor memory;
  Tensor normalizer;
  Tensor stabilizer;

  static MLstmState zeros(std::size_t batch, std::size_t hidden, std::size_t n_heads);
};

struct MLstmOutput {
  Tensor hidden;
  MLstmState state;
};

/// One stabilized mLSTM step, per head:
///
///   q = W_q x + b_q,  k = (W_k x + b_k) / sqrt(dh),  v = W_v x + b_v
///   C' = f C + i v k^T,  n' = f n + i k
///   h = o * C' q / max(|n'^T q|, 1)
///
/// In the stabilized form the floor 1 becomes exp(-m'), which keeps the
/// output identical to the unstabilized recurrence.
MLstmOutput mlstm_step(const MLstmParams& params, const MLstmState& state, const Tensor& x);

}  // namespace xltrade::xlstm

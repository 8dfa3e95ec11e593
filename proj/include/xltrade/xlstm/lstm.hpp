#pragma once

#include "xltrade/xlstm/common.hpp"

namespace xltrade::xlstm {

/// Classic LSTM (sigmoid gates, tanh candidate and output squashing); the
/// baseline recurrent core.
struct LstmParams {
  GateParams input_gate;
  GateParams forget_gate;
  GateParams candidate;
  GateParams output_gate;

  static LstmParams zeros(std::size_t hidden, std::size_t input);
  static LstmParams init(std::size_t hidden, std::size_t input, Rng& rng);

  std::size_t hidden_dim() const { return candidate.bias.dim(0); }
  std::size_t input_dim() const { return candidate.input_weight.dim(1); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct LstmState {
  Tensor hidden;
  Tensor cell;

  static LstmState zeros(std::size_t batch, std::size_t hidden);
};

struct LstmOutput {
  Tensor hidden;
  LstmState state;
};

LstmOutput lstm_step(const LstmParams& params, const LstmState& state, const Tensor& x);

}  // namespace xltrade::xlstm

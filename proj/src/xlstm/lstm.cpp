#include "xltrade/xlstm/lstm.hpp"

#include <cmath>

namespace xltrade::xlstm {

using namespace numerics;

namespace {

GateParams gate(std::size_t hidden, std::size_t input, double bias, Rng* rng) {
  if (!rng) {
    return {Tensor::zeros({hidden, input}, true), Tensor::zeros({hidden, hidden}, true),
            Tensor::zeros({hidden}, true)};
  }
  return {uniform_parameter({hidden, input}, 1.0 / std::sqrt(static_cast<double>(input)), *rng),
          uniform_parameter({hidden, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), *rng),
          Tensor::full({hidden}, bias, true)};
}

Tensor preactivation(const GateParams& g, const Tensor& x, const Tensor& h) {
  return add(linear(x, g.input_weight, g.bias), linear(h, g.recurrent_weight, Tensor()));
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  return {gate(hidden, input, 0, nullptr), gate(hidden, input, 0, nullptr), gate(hidden, input, 0, nullptr),
          gate(hidden, input, 0, nullptr)};
}

LstmParams LstmParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
  LstmParams p;
  p.input_gate = gate(hidden, input, 0.0, &rng);
  p.forget_gate = gate(hidden, input, 1.0, &rng);
  p.candidate = gate(hidden, input, 0.0, &rng);
  p.output_gate = gate(hidden, input, 0.0, &rng);
  return p;
}

void LstmParams::collect(const std::string& prefix, ParameterList& out) const {
  input_gate.collect(prefix + ".input_gate", out);
  forget_gate.collect(prefix + ".forget_gate", out);
  candidate.collect(prefix + ".candidate", out);
  output_gate.collect(prefix + ".output_gate", out);
}

LstmState LstmState::zeros(std::size_t batch, std::size_t hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

LstmOutput lstm_step(const LstmParams& params, const LstmState& state, const Tensor& x) {
  const std::size_t d = params.hidden_dim();
  const std::size_t batch = require_rows(x, params.input_dim(), "lstm_step input");
  if (require_rows(state.hidden, d, "lstm_step state") != batch ||
      require_rows(state.cell, d, "lstm_step state") != batch) {
    throw DimensionError("lstm_step state batch mismatch");
  }
  const Tensor i = sigmoid(preactivation(params.input_gate, x, state.hidden));
  const Tensor f = sigmoid(preactivation(params.forget_gate, x, state.hidden));
  const Tensor g = tanh(preactivation(params.candidate, x, state.hidden));
  const Tensor o = sigmoid(preactivation(params.output_gate, x, state.hidden));

  LstmOutput out;
  out.state.cell = add(mul(f, state.cell), mul(i, g));
  out.hidden = mul(o, tanh(out.state.cell));
  out.state.hidden = out.hidden;
  return out;
}

}  // namespace xltrade::xlstm

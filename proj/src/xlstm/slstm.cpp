#include "xltrade/xlstm/slstm.hpp"

#include <cmath>

namespace xltrade::xlstm {
namespace {

using namespace numerics;

GateParams zero_gate(std::size_t hidden, std::size_t input) {
  return {Tensor::zeros({hidden, input}, true), Tensor::zeros({hidden, hidden}, true), Tensor::zeros({hidden}, true)};
}

GateParams init_gate(std::size_t hidden, std::size_t input, const Tensor& mask, double bias, Rng& rng) {
  GateParams g;
  g.input_weight = uniform_parameter({hidden, input}, 1.0 / std::sqrt(static_cast<double>(input)), rng);
  g.recurrent_weight = uniform_parameter({hidden, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  if (mask.defined()) {
    auto r = g.recurrent_weight.mutable_values();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= mask[i];
  }
  g.bias = Tensor::full({hidden}, bias, true);
  return g;
}

Tensor head_mask(std::size_t hidden, std::size_t n_heads) {
  if (n_heads == 0 || hidden % n_heads != 0) throw ContractError("hidden size must be divisible by n_heads");
  if (n_heads == 1) return {};
  const std::size_t dh = hidden / n_heads;
  std::vector<double> mask(hidden * hidden, 0.0);
  for (std::size_t r = 0; r < hidden; ++r)
    for (std::size_t c = 0; c < hidden; ++c) mask[r * hidden + c] = (r / dh == c / dh) ? 1.0 : 0.0;
  return Tensor({hidden, hidden}, std::move(mask));
}

Tensor preactivation(const GateParams& gate, const Tensor& mask, const Tensor& x, const Tensor& h) {
  const Tensor recurrent = mask.defined() ? mul(gate.recurrent_weight, mask) : gate.recurrent_weight;
  return add(linear(x, gate.input_weight, gate.bias), linear(h, recurrent, Tensor()));
}

}  // namespace

SLstmParams SLstmParams::zeros(std::size_t hidden, std::size_t input, std::size_t n_heads) {
  SLstmParams p;
  p.candidate = zero_gate(hidden, input);
  p.input_gate = zero_gate(hidden, input);
  p.forget_gate = zero_gate(hidden, input);
  p.output_gate = zero_gate(hidden, input);
  p.n_heads = n_heads;
  p.recurrent_mask = head_mask(hidden, n_heads);
  return p;
}

SLstmParams SLstmParams::init(std::size_t hidden, std::size_t input, std::size_t n_heads, Rng& rng) {
  SLstmParams p;
  p.n_heads = n_heads;
  p.recurrent_mask = head_mask(hidden, n_heads);
  p.candidate = init_gate(hidden, input, p.recurrent_mask, 0.0, rng);
  p.input_gate = init_gate(hidden, input, p.recurrent_mask, 0.0, rng);
  p.forget_gate = init_gate(hidden, input, p.recurrent_mask, 1.0, rng);
  p.output_gate = init_gate(hidden, input, p.recurrent_mask, 0.0, rng);
  return p;
}

void SLstmParams::collect(const std::string& prefix, ParameterList& out) const {
  candidate.collect(prefix + ".candidate", out);
  input_gate.collect(prefix + ".input_gate", out);
  forget_gate.collect(prefix + ".forget_gate", out);
  output_gate.collect(prefix + ".output_gate", out);
}

SLstmState SLstmState::zeros(std::size_t batch, std::size_t hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden}),
          Tensor::zeros({batch, hidden})};
}

SLstmOutput slstm_step(const SLstmParams& params, const SLstmState& state, const Tensor& x) {
  const std::size_t d = params.hidden_dim();
  const std::size_t batch = require_rows(x, params.input_dim(), "slstm_step input");
  for (const Tensor* t : {&state.hidden, &state.cell, &state.normalizer, &state.stabilizer}) {
    if (require_rows(*t, d, "slstm_step state") != batch) throw DimensionError("slstm_step state batch mismatch");
  }

  const Tensor& h = state.hidden;
  const Tensor& mask = params.recurrent_mask;
  const Tensor z = tanh(preactivation(params.candidate, mask, x, h));
  const Tensor i_pre = preactivation(params.input_gate, mask, x, h);
  const Tensor f_pre = preactivation(params.forget_gate, mask, x, h);
  const Tensor o = sigmoid(preactivation(params.output_gate, mask, x, h));

  const Tensor f_log = add(f_pre, state.stabilizer);
  const Tensor m = max_with(f_log, i_pre);
  const Tensor i = exp(sub(i_pre, m));
  const Tensor f = exp(sub(f_log, m));

  SLstmOutput out;
  out.state.cell = add(mul(f, state.cell), mul(i, z));
  out.state.normalizer = add(mul(f, state.normalizer), i);
  out.state.stabilizer = m;
  out.hidden = mul(o, div(out.state.cell, out.state.normalizer));
  out.state.hidden = out.hidden;
  return out;
}

}  // namespace xltrade::xlstm

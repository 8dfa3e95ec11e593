#include "xltrade/xlstm/mlstm.hpp"

#include <cmath>

namespace xltrade::xlstm {

using namespace numerics;

MLstmParams MLstmParams::zeros(std::size_t hidden, std::size_t input, std::size_t n_heads) {
  if (n_heads == 0 || hidden % n_heads != 0) throw ContractError("hidden size must be divisible by n_heads");
  MLstmParams p;
  p.query = Projection::zeros(hidden, input);
  p.key = Projection::zeros(hidden, input);
  p.value = Projection::zeros(hidden, input);
  p.input_gate = Projection::zeros(n_heads, input);
  p.forget_gate = Projection::zeros(n_heads, input);
  p.output_gate = Projection::zeros(hidden, input);
  p.n_heads = n_heads;
  return p;
}

MLstmParams MLstmParams::init(std::size_t hidden, std::size_t input, std::size_t n_heads, Rng& rng) {
  if (n_heads == 0 || hidden % n_heads != 0) throw ContractError("hidden size must be divisible by n_heads");
  MLstmParams p;
  p.query = Projection::init(hidden, input, rng);
  p.key = Projection::init(hidden, input, rng);
  p.value = Projection::init(hidden, input, rng);
  p.input_gate = Projection::init(n_heads, input, rng);
  p.forget_gate = Projection::init(n_heads, input, rng);
  for (double& b : p.forget_gate.bias.mutable_values()) b = 1.0;
  p.output_gate = Projection::init(hidden, input, rng);
  p.n_heads = n_heads;
  return p;
}

void MLstmParams::collect(const std::string& prefix, ParameterList& out) const {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
  input_gate.collect(prefix + ".input_gate", out);
  forget_gate.collect(prefix + ".forget_gate", out);
  output_gate.collect(prefix + ".output_gate", out);
}

MLstmState MLstmState::zeros(std::size_t batch, std::size_t hidden, std::size_t n_heads) {
  const std::size_t dh = hidden / n_heads;
  return {Tensor::zeros({batch, n_heads, dh, dh}), Tensor::zeros({batch, n_heads, dh}),
          Tensor::zeros({batch, n_heads})};
}

MLstmOutput mlstm_step(const MLstmParams& params, const MLstmState& state, const Tensor& x) {
  const std::size_t d = params.hidden_dim();
  const std::size_t heads = params.n_heads;
  const std::size_t dh = params.head_dim();
  const std::size_t batch = require_rows(x, params.input_dim(), "mlstm_step input");
  if (state.memory.shape() != Shape{batch, heads, dh, dh} || state.normalizer.shape() != Shape{batch, heads, dh} ||
      state.stabilizer.shape() != Shape{batch, heads}) {
    throw DimensionError("mlstm_step state does not match [batch=" + std::to_string(batch) +
                         ", heads=" + std::to_string(heads) + ", dh=" + std::to_string(dh) + "]");
  }

  const Tensor q = reshape(params.query(x), {batch, heads, dh});
  const Tensor k = reshape(mul(params.key(x), 1.0 / std::sqrt(static_cast<double>(dh))), {batch, heads, dh});
  const Tensor v = reshape(params.value(x), {batch, heads, dh});
  const Tensor i_pre = params.input_gate(x);  // [batch, heads]
  const Tensor f_pre = params.forget_gate(x);
  const Tensor o = sigmoid(params.output_gate(x));

  const Tensor f_log = add(f_pre, state.stabilizer);
  const Tensor m = max_with(f_log, i_pre);
  const Tensor i = exp(sub(i_pre, m));
  const Tensor f = exp(sub(f_log, m));

  const Tensor i4 = reshape(i, {batch, heads, 1, 1});
  const Tensor f4 = reshape(f, {batch, heads, 1, 1});
  const Tensor update = mul(reshape(v, {batch, heads, dh, 1}), reshape(k, {batch, heads, 1, dh}));

  MLstmOutput out;
  out.state.memory = add(mul(f4, state.memory), mul(i4, update));
  out.state.normalizer =
      add(mul(reshape(f, {batch, heads, 1}), state.normalizer), mul(reshape(i, {batch, heads, 1}), k));
  out.state.stabilizer = m;

  const Tensor numerator = sum_last(mul(out.state.memory, reshape(q, {batch, heads, 1, dh})));  // [b,h,dh]
  const Tensor overlap = abs(sum_last(mul(out.state.normalizer, q)));                          // [b,h]
  const Tensor denominator = max_with(overlap, exp(neg(m)));
  const Tensor readout = div(numerator, reshape(denominator, {batch, heads, 1}));
  out.hidden = mul(o, reshape(readout, {batch, d}));
  return out;
}

}  // namespace xltrade::xlstm

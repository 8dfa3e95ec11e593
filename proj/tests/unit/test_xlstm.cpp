#include <cmath>
#include <random>

#include "../support/naive_cells.hpp"
#include "../support/random_params.hpp"
#include "doctest.h"
#include "xltrade/numerics/gradient_check.hpp"
#include "xltrade/xlstm/block_stack.hpp"

using namespace xltrade;
using namespace xltrade::xlstm;
using namespace xltrade::testing;
using numerics::gradient_check;

namespace {

Tensor row(const std::vector<double>& v) { return Tensor({1, v.size()}, v); }

std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("sLSTM zero weights from zero state") {
  auto params = SLstmParams::zeros(3, 2);
  auto out = slstm_step(params, SLstmState::zeros(1, 3), row({0.7, -1.3}));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(out.hidden[k] == 0.0);
    CHECK(out.state.normalizer[k] == 1.0);
    CHECK(out.state.cell[k] == 0.0);
    CHECK(out.state.stabilizer[k] == 0.0);
  }
}

TEST_CASE("sLSTM rejects mismatched dimensions") {
  auto params = SLstmParams::zeros(3, 2);
  CHECK_THROWS_AS(slstm_step(params, SLstmState::zeros(1, 3), row({1, 2, 3})), DimensionError);
  CHECK_THROWS_AS(slstm_step(params, SLstmState::zeros(2, 3), row({1, 2})), DimensionError);
}

TEST_CASE("stabilized cells match the naive recurrences") {
  std::mt19937_64 rng(99);
  for (std::size_t heads : {1u, 2u}) {
    for (int draw = 0; draw < 10; ++draw) {
      auto sl = SLstmParams::init(4, 3, heads, rng);
      auto ml = MLstmParams::init(4, 3, heads, rng);
      ParameterList sp, mp;
      sl.collect("s", sp);
      ml.collect("m", mp);
      // Keeps every gate preactivation within [-2, 2] for inputs in [-1, 1].
      scale_parameters(sp, 0.4);
      scale_parameters(mp, 0.4);

      NaiveSLstm naive_s(4);
      NaiveMLstm naive_m(4, heads);
      auto s_state = SLstmState::zeros(1, 4);
      auto m_state = MLstmState::zeros(1, 4, heads);
      for (const auto& x : random_sequence(20, 3, rng)) {
        auto s_out = slstm_step(sl, s_state, row(x));
        auto m_out = mlstm_step(ml, m_state, row(x));
        const auto s_ref = naive_s.step(sl, x);
        const auto m_ref = naive_m.step(ml, x);
        for (std::size_t k = 0; k < 4; ++k) {
          CHECK(std::abs(s_out.hidden[k] - s_ref[k]) < 1e-8);
          CHECK(std::abs(m_out.hidden[k] - m_ref[k]) < 1e-8);
          CHECK(s_out.state.normalizer[k] > 0.0);
        }
        s_state = s_out.state;
        m_state = m_out.state;
      }
    }
  }
}

TEST_CASE("stabilizer survives large gate preactivations") {
  auto sl = SLstmParams::zeros(2, 1);
  for (double& b : sl.forget_gate.bias.mutable_values()) b = 50.0;
  for (double& b : sl.input_gate.bias.mutable_values()) b = 50.0;
  for (double& b : sl.candidate.bias.mutable_values()) b = 0.3;
  NaiveSLstm naive(2);
  auto state = SLstmState::zeros(1, 2);
  bool naive_overflowed = false;
  for (int t = 0; t < 20; ++t) {
    auto out = slstm_step(sl, state, row({1.0}));
    for (double v : out.hidden.values()) CHECK(std::isfinite(v));
    const auto ref = naive.step(sl, {1.0});
    naive_overflowed = naive_overflowed || !std::isfinite(ref[0]);
    state = out.state;
  }
  CHECK(naive_overflowed);
  CHECK(state.hidden[0] == doctest::Approx(0.5 * std::tanh(0.3)));
}

TEST_CASE("mLSTM zero value stream gives zero output") {
  std::mt19937_64 rng(1);
  auto p = MLstmParams::init(4, 3, 1, rng);
  for (double& v : p.value.weight.mutable_values()) v = 0.0;
  auto out = mlstm_step(p, MLstmState::zeros(1, 4, 1), row({0.2, -0.4, 0.9}));
  for (double v : out.hidden.values()) CHECK(v == 0.0);
  for (double v : out.state.memory.values()) CHECK(v == 0.0);
}

TEST_CASE("mLSTM single outer-product update") {
  // q = k = e1 (after the 1/sqrt(d) key scale), v = e2, i~ = f~ = 0.
  auto p = MLstmParams::zeros(2, 2);
  p.query.weight.mutable_values()[0] = 1.0;
  p.key.weight.mutable_values()[0] = std::sqrt(2.0);
  p.value.weight.mutable_values()[2] = 1.0;
  auto out = mlstm_step(p, MLstmState::zeros(1, 2, 1), row({1.0, 0.0}));
  const auto memory = values_of(out.state.memory);
  CHECK(memory == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  CHECK(out.state.normalizer[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out.state.normalizer[1] == 0.0);
  // Output gate sigma(0) = 0.5 scales the readout e2.
  CHECK(out.hidden[0] == 0.0);
  CHECK(out.hidden[1] / 0.5 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("LSTM baseline cell") {
  auto zero = lstm_step(LstmParams::zeros(3, 2), LstmState::zeros(1, 3), row({1.0, -2.0}));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(zero.hidden[k] == 0.0);
    CHECK(zero.state.cell[k] == 0.0);
  }
  auto p = LstmParams::zeros(1, 1);
  p.candidate.bias.mutable_values()[0] = 20.0;  // tanh(20) rounds to 1
  auto out = lstm_step(p, LstmState::zeros(1, 1), row({0.0}));
  CHECK(out.state.cell[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.hidden[0] == doctest::Approx(0.23106).epsilon(1e-5));
}

TEST_CASE("cell rollout gradients match central differences") {
  std::mt19937_64 rng(17);
  const auto inputs = random_sequence(5, 3, rng);
  const auto weights = random_sequence(5, 4, rng);
  auto rollout_loss = [&](auto step, auto state) {
    Tensor loss = Tensor::scalar(0.0);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      auto out = step(state, row(inputs[t]));
      loss = numerics::add(loss, numerics::sum(numerics::mul(out.hidden, row(weights[t]))));
      state = out.state;
    }
    return loss;
  };

  SUBCASE("sLSTM") {
    auto p = SLstmParams::init(4, 3, 2, rng);
    ParameterList list;
    p.collect("s", list);
    auto params = tensors_of(list);
    auto f = [&] {
      return rollout_loss([&](const SLstmState& s, const Tensor& x) { return slstm_step(p, s, x); },
                          SLstmState::zeros(1, 4));
    };
    CHECK(gradient_check(f, params, 1e-5) < 1e-4);
  }
  SUBCASE("mLSTM") {
    auto p = MLstmParams::init(4, 3, 2, rng);
    ParameterList list;
    p.collect("m", list);
    auto params = tensors_of(list);
    auto f = [&] {
      return rollout_loss([&](const MLstmState& s, const Tensor& x) { return mlstm_step(p, s, x); },
                          MLstmState::zeros(1, 4, 2));
    };
    CHECK(gradient_check(f, params, 1e-5) < 1e-4);
  }
  SUBCASE("LSTM") {
    auto p = LstmParams::init(4, 3, rng);
    ParameterList list;
    p.collect("l", list);
    auto params = tensors_of(list);
    auto f = [&] {
      return rollout_loss([&](const LstmState& s, const Tensor& x) { return lstm_step(p, s, x); },
                          LstmState::zeros(1, 4));
    };
    CHECK(gradient_check(f, params, 1e-5) < 1e-4);
  }
}

TEST_CASE("block stack") {
  BlockStackConfig config;
  config.embedding_dim = 8;
  config.n_heads = 2;

  SUBCASE("zero weights give the residual identity") {
    BlockStackConfig single = config;
    single.layers = {CellKind::kSLstm};
    auto params = BlockStackParams::zeros(single);
    std::mt19937_64 rng(3);
    const auto x = random_sequence(1, 8, rng)[0];
    auto out = stack_step(single, params, zero_states(single, 1), row(x));
    for (std::size_t k = 0; k < 8; ++k) CHECK(out.output[k] == x[k]);
    single.layers = {CellKind::kMLstm};
    params = BlockStackParams::zeros(single);
    out = stack_step(single, params, zero_states(single, 1), row(x));
    for (std::size_t k = 0; k < 8; ++k) CHECK(out.output[k] == x[k]);
  }

  SUBCASE("output shape and validation") {
    std::mt19937_64 rng(4);
    auto params = BlockStackParams::init(config, rng);
    auto out = stack_step(config, params, zero_states(config, 3), Tensor::zeros({3, 8}));
    CHECK(out.output.shape() == Shape{3, 8});
    CHECK(out.states.size() == 2);
    auto states = zero_states(config, 1);
    states.pop_back();
    CHECK_THROWS_AS(stack_step(config, params, states, Tensor::zeros({1, 8})), ContractError);
    CHECK_THROWS_AS(stack_step(config, params, zero_states(config, 1), Tensor::zeros({1, 7})), DimensionError);
    BlockStackConfig bad = config;
    bad.n_heads = 3;
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = config;
    bad.layers.clear();
    CHECK_THROWS_AS(bad.validate(), ContractError);
  }

  SUBCASE("batched lockstep rows equal independent carried-state runs bit for bit") {
    std::mt19937_64 rng(5);
    auto params = BlockStackParams::init(config, rng);
    const std::size_t rows = 3, steps = 6;
    std::vector<std::vector<std::vector<double>>> seqs;
    for (std::size_t r = 0; r < rows; ++r) seqs.push_back(random_sequence(steps, 8, rng));

    std::vector<std::vector<double>> single_out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      auto states = zero_states(config, 1);
      for (std::size_t t = 0; t < steps; ++t) {
        auto out = stack_step(config, params, states, row(seqs[r][t]));
        states = out.states;
        if (t + 1 == steps) single_out[r] = values_of(out.output);
      }
    }
    auto states = zero_states(config, rows);
    Tensor last;
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> x;
      for (std::size_t r = 0; r < rows; ++r) x.insert(x.end(), seqs[r][t].begin(), seqs[r][t].end());
      auto out = stack_step(config, params, states, Tensor({rows, 8}, x));
      states = out.states;
      last = out.output;
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < 8; ++k) CHECK(last[r * 8 + k] == single_out[r][k]);
  }

  SUBCASE("stack_step leaves its input states untouched") {
    std::mt19937_64 rng(6);
    auto params = BlockStackParams::init(config, rng);
    auto states = stack_step(config, params, zero_states(config, 1), row(random_sequence(1, 8, rng)[0])).states;
    auto before = detach(states[0]);
    auto after = stack_step(config, params, states, row(random_sequence(1, 8, rng)[0]));
    const auto& a = std::get<MLstmState>(states[0]);
    const auto& b = std::get<MLstmState>(before);
    CHECK(values_of(a.memory) == values_of(b.memory));
    CHECK(values_of(a.stabilizer) == values_of(b.stabilizer));
    CHECK(after.states[0].index() == states[0].index());
  }

  SUBCASE("stack_batch concatenates rows") {
    auto a = zero_states(config, 1), b = zero_states(config, 2);
    auto merged = stack_batch({&a[1], &b[1]});
    CHECK(batch_size(merged) == 3);
    CHECK_THROWS_AS(stack_batch({&a[0], &b[1]}), ContractError);
  }
}

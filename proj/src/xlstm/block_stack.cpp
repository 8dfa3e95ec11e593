#include "xltrade/xlstm/block_stack.hpp"

#include <cmath>

namespace xltrade::xlstm {

using namespace numerics;

std::string to_string(CellKind kind) { return kind == CellKind::kSLstm ? "slstm" : "mlstm"; }

CellKind cell_kind_from_string(const std::string& name) {
  if (name == "slstm") return CellKind::kSLstm;
  if (name == "mlstm") return CellKind::kMLstm;
  throw ContractError("unknown cell kind '" + name + "'");
}

void BlockStackConfig::validate() const {
  if (layers.empty()) throw ContractError("block stack needs at least one layer");
  if (embedding_dim == 0 || n_heads == 0 || embedding_dim % n_heads != 0) {
    throw ContractError("embedding_dim must be a positive multiple of n_heads");
  }
  if (!(mlp_expansion > 0.0)) throw ContractError("mlp_expansion must be positive");
  if (!(layernorm_eps >= 0.0)) throw ContractError("layernorm_eps must be nonnegative");
}

std::size_t BlockStackConfig::mlp_dim() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mlp_expansion * embedding_dim)));
}

namespace {

BlockParams make_block(const BlockStackConfig& config, CellKind kind, Rng* rng) {
  const std::size_t e = config.embedding_dim;
  const std::size_t hidden = config.mlp_dim();
  BlockParams b;
  b.kind = kind;
  b.norm1_scale = Tensor::full({e}, 1.0, true);
  b.norm1_shift = Tensor::zeros({e}, true);
  b.norm2_scale = Tensor::full({e}, 1.0, true);
  b.norm2_shift = Tensor::zeros({e}, true);
  if (kind == CellKind::kSLstm) {
    b.cell = rng ? SLstmParams::init(e, e, config.n_heads, *rng) : SLstmParams::zeros(e, e, config.n_heads);
  } else {
    b.cell = rng ? MLstmParams::init(e, e, config.n_heads, *rng) : MLstmParams::zeros(e, e, config.n_heads);
  }
  b.up = rng ? Projection::init(hidden, e, *rng) : Projection::zeros(hidden, e);
  b.down = rng ? Projection::init(e, hidden, *rng) : Projection::zeros(e, hidden);
  return b;
}

template <typename F>
LayerState map_state(const LayerState& state, F f) {
  return std::visit(
      [&](const auto& s) -> LayerState {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SLstmState>) {
          return SLstmState{f(s.hidden), f(s.cell), f(s.normalizer), f(s.stabilizer)};
        } else if constexpr (std::is_same_v<S, MLstmState>) {
          return MLstmState{f(s.memory), f(s.normalizer), f(s.stabilizer)};
        } else {
          return LstmState{f(s.hidden), f(s.cell)};
        }
      },
      state);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  Shape shape = parts.front().shape();
  std::vector<double> values;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (!std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1) || p.rank() != shape.size()) {
      throw DimensionError("cannot batch states of shapes " + shape_string(shape) + " and " + shape_string(p.shape()));
    }
    values.insert(values.end(), p.values().begin(), p.values().end());
    rows += p.dim(0);
  }
  shape[0] = rows;
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

BlockStackParams BlockStackParams::zeros(const BlockStackConfig& config) {
  config.validate();
  BlockStackParams p;
  for (auto kind : config.layers) p.blocks.push_back(make_block(config, kind, nullptr));
  return p;
}

BlockStackParams BlockStackParams::init(const BlockStackConfig& config, Rng& rng) {
  config.validate();
  BlockStackParams p;
  for (auto kind : config.layers) p.blocks.push_back(make_block(config, kind, &rng));
  return p;
}

void BlockStackParams::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    const std::string base = prefix + "." + std::to_string(k);
    out.push_back({base + ".norm1.scale", b.norm1_scale});
    out.push_back({base + ".norm1.shift", b.norm1_shift});
    std::visit([&](const auto& cell) { cell.collect(base + "." + to_string(b.kind), out); }, b.cell);
    out.push_back({base + ".norm2.scale", b.norm2_scale});
    out.push_back({base + ".norm2.shift", b.norm2_shift});
    b.up.collect(base + ".up", out);
    b.down.collect(base + ".down", out);
  }
}

std::vector<LayerState> zero_states(const BlockStackConfig& config, std::size_t batch) {
  std::vector<LayerState> states;
  for (auto kind : config.layers) {
    if (kind == CellKind::kSLstm) {
      states.emplace_back(SLstmState::zeros(batch, config.embedding_dim));
    } else {
      states.emplace_back(MLstmState::zeros(batch, config.embedding_dim, config.n_heads));
    }
  }
  return states;
}

LayerState detach(const LayerState& state) {
  return map_state(state, [](const Tensor& t) { return t.detach(); });
}

LayerState stack_batch(const std::vector<const LayerState*>& rows) {
  if (rows.empty()) throw ContractError("stack_batch of zero states");
  const auto index = rows.front()->index();
  for (const auto* r : rows) {
    if (r->index() != index) throw ContractError("stack_batch of mixed state kinds");
  }
  // Gather field k of every row, relying on map_state visiting fields in a fixed order.
  std::vector<std::vector<Tensor>> fields;
  for (const auto* r : rows) {
    std::size_t k = 0;
    map_state(*r, [&](const Tensor& t) {
      if (fields.size() <= k) fields.emplace_back();
      fields[k++].push_back(t);
      return t;
    });
  }
  std::size_t k = 0;
  return map_state(*rows.front(), [&](const Tensor&) { return concat_rows(fields[k++]); });
}

std::size_t batch_size(const LayerState& state) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, MLstmState>) {
          return s.memory.dim(0);
        } else {
          return s.hidden.dim(0);
        }
      },
      state);
}

StackOutput stack_step(const BlockStackConfig& config, const BlockStackParams& params,
                       const std::vector<LayerState>& states, const Tensor& x) {
  if (params.blocks.size() != config.layers.size() || states.size() != config.layers.size()) {
    throw ContractError("stack_step: config has " + std::to_string(config.layers.size()) + " layers, params " +
                        std::to_string(params.blocks.size()) + ", states " + std::to_string(states.size()));
  }
  require_rows(x, config.embedding_dim, "stack_step input");

  StackOutput out;
  Tensor current = x;
  for (std::size_t k = 0; k < params.blocks.size(); ++k) {
    const auto& block = params.blocks[k];
    const Tensor normed = layernorm(current, block.norm1_scale, block.norm1_shift, config.layernorm_eps);
    Tensor cell_out;
    if (block.kind == CellKind::kSLstm) {
      const auto* state = std::get_if<SLstmState>(&states[k]);
      if (!state) throw ContractError("stack_step: layer " + std::to_string(k) + " expects an sLSTM state");
      auto step = slstm_step(std::get<SLstmParams>(block.cell), *state, normed);
      cell_out = step.hidden;
      out.states.emplace_back(std::move(step.state));
    } else {
      const auto* state = std::get_if<MLstmState>(&states[k]);
      if (!state) throw ContractError("stack_step: layer " + std::to_string(k) + " expects an mLSTM state");
      auto step = mlstm_step(std::get<MLstmParams>(block.cell), *state, normed);
      cell_out = step.hidden;
      out.states.emplace_back(std::move(step.state));
    }
    const Tensor u = add(current, cell_out);
    const Tensor mlp = block.down(gelu(block.up(layernorm(u, block.norm2_scale, block.norm2_shift, config.layernorm_eps))));
    current = add(u, mlp);
  }
  out.output = current;
  return out;
}

}  // namespace xltrade::xlstm

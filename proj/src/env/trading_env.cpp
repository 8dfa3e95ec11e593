#include "xltrade/env/trading_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "xltrade/market/observation.hpp"
#include "xltrade/numerics/errors.hpp"

namespace xltrade::env {

void EnvConfig::validate() const {
  if (!(initial_balance > 0) || !std::isfinite(initial_balance)) throw ContractError("initial_balance must be > 0");
  if (h_max < 1) throw ContractError("h_max must be at least 1");
  if (!(cost_rate >= 0 && cost_rate < 1)) throw ContractError("cost_rate must be in [0, 1)");
  if (!(reward_scale > 0) || !std::isfinite(reward_scale)) throw ContractError("reward_scale must be > 0");
  if (std::isnan(turbulence_threshold)) throw ContractError("turbulence_threshold is NaN");
  if (window < 1) throw ContractError("window must be at least 1");
}

bool TradeResult::any() const {
  return std::any_of(executed.begin(), executed.end(), [](std::int64_t q) { return q != 0; });
}

double total_value(const PortfolioState& state, std::span<const double> prices) {
  if (prices.size() != state.shares.size()) throw DimensionError("price count does not match holdings");
  double total = state.balance;
  for (std::size_t j = 0; j < prices.size(); ++j) total += static_cast<double>(state.shares[j]) * prices[j];
  return total;
}

TradeResult execute_trades(const EnvConfig& config, PortfolioState& state, std::span<const double> action,
                           std::span<const double> prices) {
  const std::size_t n = state.shares.size();
  if (action.size() != n || prices.size() != n) throw DimensionError("action and price counts must match holdings");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(prices[j] > 0) || !std::isfinite(prices[j])) throw ContractError("prices must be positive and finite");
    if (!std::isfinite(action[j])) throw ContractError("action must be finite");
  }
  const auto h_max = static_cast<double>(config.h_max);
  std::vector<std::int64_t> desired(n);
  for (std::size_t j = 0; j < n; ++j) {
    desired[j] = static_cast<std::int64_t>(std::round(std::clamp(action[j], -1.0, 1.0) * h_max));
  }

  TradeResult result{std::vector<std::int64_t>(n, 0), 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    if (desired[j] >= 0) continue;
    const std::int64_t q = std::min(-desired[j], state.shares[j]);
    if (q == 0) continue;
    const double notional = static_cast<double>(q) * prices[j];
    const double fee = config.cost_rate * notional;
    state.shares[j] -= q;
    state.balance += notional - fee;
    result.executed[j] = -q;
    result.cost += fee;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (desired[j] <= 0) continue;
    const double unit = prices[j] * (1.0 + config.cost_rate);
    std::int64_t q = std::min<std::int64_t>(desired[j], static_cast<std::int64_t>(std::floor(state.balance / unit)));
    auto spend = [&](std::int64_t shares) {
      const double notional = static_cast<double>(shares) * prices[j];
      return std::pair{notional, config.cost_rate * notional};
    };
    while (q > 0) {
      const auto [notional, fee] = spend(q);
      if (notional + fee <= state.balance) break;
      --q;
    }
    if (q <= 0) continue;
    const auto [notional, fee] = spend(q);
    state.balance -= notional + fee;
    state.shares[j] += q;
    result.executed[j] = q;
    result.cost += fee;
  }
  return result;
}

double compute_reward(double turbulence, const EnvConfig& config, double prev_total_value, double total_value,
                      double cost) {
  if (turbulence > config.turbulence_threshold) return config.penalty_value;
  const double raw = (total_value - prev_total_value) - cost;
  return std::clamp(raw * config.reward_scale, -1.0, 1.0);
}

std::pair<std::vector<double>, PortfolioState> reset(const EnvConfig& config, const market::MarketSplit& split) {
  config.validate();
  const auto& panel = split.panel;
  if (panel.n_days() < config.window + 2) throw ContractError("split needs at least window + 2 days");
  if (split.turbulence.values.size() != panel.n_days()) throw DimensionError("turbulence length does not match panel");
  PortfolioState state;
  state.balance = config.initial_balance;
  state.shares.assign(panel.n_tickers(), 0);
  state.day = config.window;
  state.prev_total_value = config.initial_balance;
  auto obs = market::build_observation(panel, state.day, config.window, state, config.initial_balance);
  return {std::move(obs), std::move(state)};
}

bool is_done(const market::MarketSplit& split, const PortfolioState& state) {
  return state.day + 1 >= split.panel.n_days();
}

StepResult step(const EnvConfig& config, const market::MarketSplit& split, PortfolioState& state,
                std::span<const double> action) {
  if (is_done(split, state)) throw ContractError("step called after the episode is done");
  const auto& panel = split.panel;
  const std::size_t t = state.day;
  StepResult out;
  out.info.turbulence = split.turbulence.values[t];
  out.info.turbulent = out.info.turbulence > config.turbulence_threshold;

  TradeResult trades{std::vector<std::int64_t>(panel.n_tickers(), 0), 0.0};
  if (!(out.info.turbulent && config.block_turbulent_trades)) {
    trades = execute_trades(config, state, action, panel.prices(t));
  } else if (action.size() != panel.n_tickers()) {
    throw DimensionError("action count does not match tickers");
  }
  state.day = t + 1;
  const double value = total_value(state, panel.prices(state.day));
  out.reward = compute_reward(out.info.turbulence, config, state.prev_total_value, value, trades.cost);
  state.prev_total_value = value;

  if (trades.any()) out.info.trades = trades.executed;
  out.info.cost = trades.cost;
  out.info.total_value = value;
  out.done = is_done(split, state);
  out.obs = market::build_observation(panel, state.day, config.window, state, config.initial_balance);
  return out;
}

TradingEnv::TradingEnv(EnvConfig config, std::shared_ptr<const market::MarketSplit> split)
    : config_(config), split_(std::move(split)) {
  if (!split_) throw ContractError("environment needs a market split");
  config_.validate();
}

std::size_t TradingEnv::obs_dim() const {
  return market::observation_size(config_.window, split_->panel.n_tickers());
}

std::vector<double> TradingEnv::reset() {
  auto [obs, state] = env::reset(config_, *split_);
  state_ = std::move(state);
  trace_.clear();
  trace_.push_back({split_->panel.dates()[state_.day], std::vector<std::int64_t>(n_actions(), 0), 0.0, state_.balance,
                    state_.prev_total_value, split_->turbulence.values[state_.day], 0.0});
  return obs;
}

StepResult TradingEnv::step(std::span<const double> action) {
  auto result = env::step(config_, *split_, state_, action);
  trace_.push_back({split_->panel.dates()[state_.day],
                    result.info.trades.empty() ? std::vector<std::int64_t>(n_actions(), 0) : result.info.trades,
                    result.info.cost, state_.balance, result.info.total_value, result.info.turbulence,
                    result.reward});
  return result;
}

void TradingEnv::write_trace_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "date";
  for (const auto& t : split_->panel.tickers()) out << ",shares_" << t;
  out << ",cost,balance,total_value,turbulence,reward\n";
  char buf[64];
  for (const auto& row : trace_) {
    out << row.date.to_string();
    for (auto q : row.trades) out << ',' << q;
    for (double v : {row.cost, row.balance, row.total_value, row.turbulence, row.reward}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace xltrade::env

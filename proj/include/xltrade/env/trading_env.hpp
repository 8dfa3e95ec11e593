#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xltrade/env/portfolio.hpp"
#include "xltrade/market/manifest.hpp"

namespace xltrade::env {

struct EnvConfig {
  double initial_balance = 1'000'000.0;
  std::int64_t h_max = 100;
  double cost_rate = 0.001;
  double turbulence_threshold = std::numeric_limits<double>::infinity();
  double reward_scale = 1e-4;
  double penalty_value = -1.0;
  std::size_t window = 30;
  bool block_turbulent_trades = true;

  void validate() const;
};

struct TradeResult {
  std::vector<std::int64_t> executed;  // signed shares, negative for sells
  double cost = 0;

  bool any() const;
};

struct StepInfo {
  std::vector<std::int64_t> trades;
  double cost = 0;
  bool turbulent = false;
  double turbulence = 0;
  double total_value = 0;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0;
  bool done = false;
  StepInfo info;
};

double total_value(const PortfolioState& state, std::span<const double> prices);

/// Actions are clamped to [-1, 1]. Sells run first, capped at holdings; buys
/// follow in ticker order, each capped so its notional plus fee fits the cash.
TradeResult execute_trades(const EnvConfig& config, PortfolioState& state, std::span<const double> action,
                           std::span<const double> prices);

double compute_reward(double turbulence, const EnvConfig& config, double prev_total_value, double total_value,
                      double cost);

/// Needs at least window + 2 days; trading starts at day index window.
std::pair<std::vector<double>, PortfolioState> reset(const EnvConfig& config, const market::MarketSplit& split);

StepResult step(const EnvConfig& config, const market::MarketSplit& split, PortfolioState& state,
                std::span<const double> action);

bool is_done(const market::MarketSplit& split, const PortfolioState& state);

struct TraceRow {
  market::Date date;
  std::vector<std::int64_t> trades;
  double cost = 0;
  double balance = 0;
  double total_value = 0;
  double turbulence = 0;
  double reward = 0;
};

/// Stateful wrapper that records a per-step trace.
class TradingEnv {
 public:
  TradingEnv(EnvConfig config, std::shared_ptr<const market::MarketSplit> split);

  std::vector<double> reset();
  StepResult step(std::span<const double> action);

  bool done() const { return env::is_done(*split_, state_); }
  const PortfolioState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  const market::MarketSplit& split() const { return *split_; }
  std::size_t obs_dim() const;
  std::size_t n_actions() const { return split_->panel.n_tickers(); }
  /// Steps from reset to done.
  std::size_t episode_length() const { return split_->panel.n_days() - 1 - config_.window; }

  /// The reset day (no trades) followed by one row per step.
  const std::vector<TraceRow>& trace() const { return trace_; }
  void write_trace_csv(const std::filesystem::path& path) const;

 private:
  EnvConfig config_;
  std::shared_ptr<const market::MarketSplit> split_;
  PortfolioState state_;
  std::vector<TraceRow> trace_;
};

}  // namespace xltrade::env

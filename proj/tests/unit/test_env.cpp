#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/market_fixtures.hpp"
#include "doctest.h"
#include "xltrade/env/trading_env.hpp"
#include "xltrade/numerics/errors.hpp"

using namespace xltrade;
using namespace xltrade::env;
using xltrade::testing::split_from_prices;

namespace {

PortfolioState portfolio(double balance, std::vector<std::int64_t> shares) {
  return {balance, std::move(shares), 0, balance};
}

EnvConfig small_window(std::size_t w) {
  EnvConfig c;
  c.window = w;
  return c;
}

}  // namespace

TEST_CASE("execute_trades accounting") {
  const EnvConfig config;
  const std::vector<double> ten{10.0};

  auto s = portfolio(1'000'000, {0});
  auto r = execute_trades(config, s, std::vector<double>{0.0}, ten);
  CHECK(r.cost == 0);
  CHECK_FALSE(r.any());
  CHECK(s.balance == 1'000'000);

  r = execute_trades(config, s, std::vector<double>{1.0}, ten);
  CHECK(r.executed[0] == 100);
  CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.balance == doctest::Approx(998'999.0).epsilon(1e-15));
  CHECK(s.shares[0] == 100);

  auto empty = portfolio(500, {0});
  r = execute_trades(config, empty, std::vector<double>{-1.0}, ten);
  CHECK(r.executed[0] == 0);
  CHECK(r.cost == 0);
  CHECK(empty.balance == 500);

  SUBCASE("actions outside [-1, 1] are clamped") {
    auto t = portfolio(1'000'000, {0});
    CHECK(execute_trades(config, t, std::vector<double>{7.5}, ten).executed[0] == 100);
  }
  SUBCASE("rounding is half away from zero") {
    EnvConfig c;
    c.h_max = 10;
    auto t = portfolio(1000, {5});
    CHECK(execute_trades(c, t, std::vector<double>{-0.05}, ten).executed[0] == -1);
    CHECK(execute_trades(c, t, std::vector<double>{0.05}, ten).executed[0] == 1);
    CHECK(execute_trades(c, t, std::vector<double>{0.04}, ten).executed[0] == 0);
  }
  SUBCASE("sell proceeds net of fee") {
    auto t = portfolio(0, {50});
    r = execute_trades(config, t, std::vector<double>{-1.0}, ten);
    CHECK(r.executed[0] == -50);
    CHECK(t.shares[0] == 0);
    CHECK(t.balance == doctest::Approx(500 - 0.5).epsilon(1e-15));
    CHECK(r.cost == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("sells fund same-step buys in ticker order") {
  const EnvConfig config;
  auto s = portfolio(0, {0, 100, 0});
  const std::vector<double> prices{10.0, 10.0, 10.0};
  const auto r = execute_trades(config, s, std::vector<double>{1.0, -1.0, 1.0}, prices);
  CHECK(r.executed[1] == -100);
  // 999 cash after the sale buys 99 of ticker 0 at 10.01 each, leaving too little for ticker 2.
  CHECK(r.executed[0] == 99);
  CHECK(r.executed[2] == 0);
  CHECK(s.balance >= 0);
  CHECK(s.balance == doctest::Approx(999.0 - 99 * 10.01).epsilon(1e-12));
}

TEST_CASE("buys are capped by cash including the fee") {
  const EnvConfig config;
  auto s = portfolio(1000.5, {0});
  const auto r = execute_trades(config, s, std::vector<double>{1.0}, std::vector<double>{10.0});
  CHECK(r.executed[0] == 99);
  CHECK(s.balance >= 0);
  auto exact = portfolio(1001.0, {0});
  CHECK(execute_trades(config, exact, std::vector<double>{1.0}, std::vector<double>{10.0}).executed[0] == 100);
  CHECK(exact.balance == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(exact.balance >= 0);
}

TEST_CASE("execute_trades input checks") {
  const EnvConfig config;
  auto s = portfolio(100, {0});
  CHECK_THROWS_AS(execute_trades(config, s, std::vector<double>{0.5}, std::vector<double>{0.0}), ContractError);
  CHECK_THROWS_AS(execute_trades(config, s, std::vector<double>{NAN}, std::vector<double>{1.0}), ContractError);
  CHECK_THROWS_AS(execute_trades(config, s, std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("compute_reward") {
  EnvConfig config;
  config.turbulence_threshold = 10;
  CHECK(compute_reward(11, config, 1e6, 2e6, 0) == -1.0);
  CHECK(compute_reward(11, config, 1e6, 0.5e6, 123) == -1.0);
  CHECK(compute_reward(10, config, 1e6, 1e6, 0) == 0.0);
  CHECK(compute_reward(0, config, 1'000'000, 1'005'000, 10) == doctest::Approx(0.499).epsilon(1e-12));
  CHECK(compute_reward(0, config, 1e6, 1.1e6, 0) == 1.0);
  CHECK(compute_reward(0, config, 1e6, 0.9e6, 0) == -1.0);
}

TEST_CASE("reset") {
  const auto split = split_from_prices({std::vector<double>(10, 5.0), std::vector<double>(10, 7.0)});
  const EnvConfig config = small_window(3);
  const auto [obs, state] = reset(config, split);
  CHECK(state.balance == 1'000'000);
  CHECK(total_value(state, split.panel.prices(state.day)) == 1'000'000);
  CHECK(state.day == 3);
  CHECK(obs.size() == 3 * 2 * 6 + 1 + 2);
  CHECK(obs[36] == 1.0);
  CHECK(obs[37] == 0.0);
  CHECK(obs[38] == 0.0);
  const auto [obs2, state2] = reset(config, split);
  CHECK(obs2 == obs);
  CHECK(state2.shares == state.shares);

  const auto short_split = split_from_prices({std::vector<double>(4, 5.0)});
  CHECK_THROWS_AS(reset(config, short_split), ContractError);
  CHECK_NOTHROW(reset(config, split_from_prices({std::vector<double>(5, 5.0)})));
}

TEST_CASE("hold on constant prices keeps the initial value") {
  auto split = std::make_shared<market::MarketSplit>(split_from_prices({std::vector<double>(40, 5.0)}));
  TradingEnv env(small_window(5), split);
  env.reset();
  std::size_t steps = 0;
  StepResult r;
  const std::vector<double> hold{0.0};
  do {
    r = env.step(hold);
    CHECK(r.reward == 0.0);
    ++steps;
  } while (!r.done);
  CHECK(steps == env.episode_length());
  CHECK(steps == 40 - 1 - 5);
  CHECK(r.info.total_value == 1'000'000);
  CHECK(env.state().day == 39);
  CHECK_THROWS_AS(env.step(hold), ContractError);
}

TEST_CASE("mark to market after a buy") {
  std::vector<double> prices(8, 10.0);
  prices[4] = 20.0;
  prices[5] = 20.0;
  const auto split = split_from_prices({prices});
  const EnvConfig config = small_window(3);
  auto [obs, state] = reset(config, split);
  // day 3: buy 100 at 10 for 1,001 total
  auto r = step(config, split, state, std::vector<double>{1.0});
  REQUIRE(r.info.trades.size() == 1);
  CHECK(r.info.trades[0] == 100);
  CHECK(state.day == 4);
  // value at day 4: 998,999 cash + 100 * 20
  CHECK(r.info.total_value == doctest::Approx(1'000'999.0).epsilon(1e-15));
  CHECK(r.reward == doctest::Approx((999.0 - 1.0) * 1e-4).epsilon(1e-12));
  CHECK(obs.size() == r.obs.size());
  CHECK(r.obs.back() == doctest::Approx(2000.0 / 1e6).epsilon(1e-15));
  r = step(config, split, state, std::vector<double>{0.0});
  CHECK(r.reward == 0.0);
  CHECK(r.info.trades.empty());
}

TEST_CASE("turbulent days hold and pay the penalty") {
  std::vector<double> prices(12, 10.0);
  std::vector<double> turb(12, 0.0);
  turb[4] = 9.0;
  turb[6] = 9.0;
  const auto split = split_from_prices({prices}, turb, 5.0);
  EnvConfig config = small_window(3);
  config.turbulence_threshold = split.turbulence.threshold;
  auto [obs, state] = reset(config, split);
  auto r = step(config, split, state, std::vector<double>{1.0});
  CHECK(r.info.trades.size() == 1);
  CHECK_FALSE(r.info.turbulent);
  r = step(config, split, state, std::vector<double>{1.0});
  CHECK(r.info.turbulent);
  CHECK(r.reward == -1.0);
  CHECK(r.info.trades.empty());
  CHECK(r.info.cost == 0.0);
  CHECK(state.shares[0] == 100);

  EnvConfig through = config;
  through.block_turbulent_trades = false;
  auto [obs2, s2] = reset(through, split);
  step(through, split, s2, std::vector<double>{1.0});
  r = step(through, split, s2, std::vector<double>{1.0});
  CHECK(r.reward == -1.0);
  CHECK(r.info.trades.size() == 1);
  CHECK(s2.shares[0] == 200);
}

TEST_CASE("random actions preserve accounting invariants") {
  market::SyntheticConfig sc;
  sc.symbols = {"A", "B", "C"};
  sc.end = market::Date::parse("2013-12-31");
  sc.volatility = 0.03;
  sc.shock_probability = 0.02;
  sc.trend_drift = 0.001;
  market::SplitDates splits;
  splits.train_end = market::Date::parse("2012-12-31");
  splits.test_start = market::Date::parse("2013-01-01");
  splits.test_end = market::Date::parse("2013-12-31");
  auto ds = testing::synthetic_dataset(sc, splits);
  auto split = std::make_shared<market::MarketSplit>(ds.train);
  EnvConfig config = small_window(5);
  config.turbulence_threshold = ds.train.turbulence.threshold;
  TradingEnv env(config, split);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  env.reset();
  std::size_t steps = 0, turbulent = 0;
  while (steps < 10'000) {
    const std::vector<double> action{unit(rng), unit(rng), unit(rng)};
    const auto r = env.step(action);
    ++steps;
    const auto& s = env.state();
    CHECK(s.balance >= 0);
    for (auto q : s.shares) CHECK(q >= 0);
    const double identity = total_value(s, split->panel.prices(s.day));
    CHECK(std::abs(r.info.total_value - identity) <= 1e-6 * std::abs(identity));
    CHECK(std::isfinite(r.reward));
    CHECK((r.info.cost == 0.0) == r.info.trades.empty());
    if (r.info.turbulent) {
      ++turbulent;
      CHECK(r.reward == -1.0);
      CHECK(r.info.trades.empty());
    }
    if (r.done) env.reset();
  }
  CHECK(turbulent > 0);
}

TEST_CASE("episodes are deterministic") {
  std::vector<double> a(30), b(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a[i] = 10 + std::sin(0.3 * static_cast<double>(i));
    b[i] = 20 + std::cos(0.2 * static_cast<double>(i));
  }
  auto split = std::make_shared<market::MarketSplit>(split_from_prices({a, b}));
  auto run = [&] {
    TradingEnv env(small_window(4), split);
    env.reset();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> rewards;
    while (!env.done()) rewards.push_back(env.step(std::vector<double>{unit(rng), unit(rng)}).reward);
    return std::pair{rewards, env.state().balance};
  };
  CHECK(run() == run());
}

TEST_CASE("trace csv") {
  auto split = std::make_shared<market::MarketSplit>(split_from_prices({std::vector<double>(8, 5.0)}));
  TradingEnv env(small_window(3), split);
  env.reset();
  while (!env.done()) env.step(std::vector<double>{0.5});
  CHECK(env.trace().size() == env.episode_length() + 1);
  const auto path = std::filesystem::temp_directory_path() / "xltrade_trace.csv";
  env.write_trace_csv(path);
  std::ifstream in(path);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "date,shares_T0,cost,balance,total_value,turbulence,reward");
  CHECK(first.rfind("2020-01-04,0,0,1000000,1000000,0,0", 0) == 0);
  CHECK(second.rfind("2020-01-05,50,", 0) == 0);
}

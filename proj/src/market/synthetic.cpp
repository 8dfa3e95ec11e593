#include "xltrade/market/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xltrade/numerics/errors.hpp"
#include "xltrade/numerics/random.hpp"

namespace xltrade::market {

namespace {

double round_micro(double x) { return std::round(x * 1e6) / 1e6; }

}  // namespace

std::vector<TickerBars> generate_synthetic(const SyntheticConfig& config) {
  if (config.symbols.empty()) throw ContractError("synthetic market needs at least one symbol");
  if (!(config.start <= config.end)) throw ContractError("synthetic start is after end");
  if (!(config.initial_price > 0) || !(config.volatility >= 0)) throw ContractError("invalid synthetic parameters");

  numerics::Rng rng = numerics::make_rng(config.seed, 0x5e7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = config.symbols.size();
  std::vector<TickerBars> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j].symbol = config.symbols[j];
  std::vector<double> close(n, config.initial_price);

  const double span = static_cast<double>(config.end.days - config.start.days);
  for (Date d = config.start; d <= config.end; d = d.plus_days(1)) {
    const unsigned wd = d.weekday();
    if (wd == 0 || wd == 6) continue;
    const double progress = span > 0 ? static_cast<double>(d.days - config.start.days) / span : 0.0;
    const double drift = progress >= config.trend_start ? config.trend_drift : config.base_drift;
    const bool shock = config.shock_probability > 0 && unit(rng) < config.shock_probability;
    const double shock_sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double z_open = normal(rng);
      const double z_close = normal(rng);
      const double z_high = std::abs(normal(rng));
      const double z_low = std::abs(normal(rng));
      const double z_vol = normal(rng);
      OhlcvBar bar;
      bar.date = d;
      if (config.constant) {
        bar.open = bar.high = bar.low = bar.close = bar.adj_close = config.initial_price;
        bar.volume = 1e6;
      } else {
        double step = drift + config.volatility * z_close;
        if (shock) step += shock_sign * config.shock_size * (1.0 + 0.25 * static_cast<double>(j));
        const double open = close[j] * std::exp(0.25 * config.volatility * z_open);
        const double next = close[j] * std::exp(step);
        bar.open = round_micro(open);
        bar.close = round_micro(next);
        bar.high = round_micro(std::max(bar.open, bar.close) * (1.0 + 0.5 * config.volatility * z_high));
        bar.low = round_micro(std::min(bar.open, bar.close) * (1.0 - 0.5 * config.volatility * z_low));
        bar.adj_close = bar.close;
        bar.volume = std::round(1e6 * std::exp(0.3 * z_vol + (shock ? 1.0 : 0.0)));
        close[j] = bar.close;
      }
      out[j].bars.push_back(bar);
    }
  }
  return out;
}

std::filesystem::path write_synthetic(const std::filesystem::path& dir, const SyntheticConfig& config,
                                      const SplitDates& splits) {
  std::filesystem::create_directories(dir);
  Manifest m;
  m.splits = splits;
  for (const auto& t : generate_synthetic(config)) {
    const std::filesystem::path file = t.symbol + ".csv";
    write_csv(dir / file, t.bars);
    m.tickers.push_back({t.symbol, file});
  }
  const auto path = dir / "manifest.json";
  save_manifest(path, m);
  return path;
}

}  // namespace xltrade::market

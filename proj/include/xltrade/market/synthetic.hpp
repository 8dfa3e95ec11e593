#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xltrade/market/manifest.hpp"

namespace xltrade::market {

/// Seeded geometric random walk over weekdays. Daily log drift switches from
/// base_drift to trend_drift at trend_start (a fraction of the span).
struct SyntheticConfig {
  std::vector<std::string> symbols{"SYN"};
  Date start = Date::parse("2009-01-01");
  Date end = Date::parse("2023-01-01");
  double initial_price = 100.0;
  double base_drift = 0.0;
  double trend_drift = 0.0;
  double trend_start = 0.0;
  double volatility = 0.01;
  double shock_probability = 0.0;  // per day, shared across tickers
  double shock_size = 0.08;
  bool constant = false;  // every price fixed at initial_price
  std::uint64_t seed = 0;
};

std::vector<TickerBars> generate_synthetic(const SyntheticConfig& config);

/// Writes one CSV per symbol plus manifest.json into dir; returns the manifest path.
std::filesystem::path write_synthetic(const std::filesystem::path& dir, const SyntheticConfig& config,
                                      const SplitDates& splits);

}  // namespace xltrade::market

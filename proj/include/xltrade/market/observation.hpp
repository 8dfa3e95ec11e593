#pragma once

#include <cstddef>
#include <vector>

#include "xltrade/env/portfolio.hpp"
#include "xltrade/market/panel.hpp"

namespace xltrade::market {

constexpr std::size_t observation_size(std::size_t window, std::size_t n_tickers) {
  return window * n_tickers * kFeatureCount + 1 + n_tickers;
}

/// Z-scored features for days t-W+1..t (day-major, then ticker, then feature),
/// then balance / initial_balance, then per-ticker holdings value / initial_balance.
std::vector<double> build_observation(const AlignedPanel& panel, std::size_t t, std::size_t window,
                                      const env::PortfolioState& portfolio, double initial_balance);

}  // namespace xltrade::market

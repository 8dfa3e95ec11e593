#include "xltrade/market/observation.hpp"

#include "xltrade/numerics/errors.hpp"

namespace xltrade::market {

std::vector<double> build_observation(const AlignedPanel& panel, std::size_t t, std::size_t window,
                                      const env::PortfolioState& portfolio, double initial_balance) {
  const std::size_t n = panel.n_tickers();
  if (window == 0) throw ContractError("window must be at least 1");
  if (t < window || t >= panel.n_days()) throw ContractError("observation day must satisfy window <= t < days");
  if (portfolio.shares.size() != n) throw DimensionError("portfolio ticker count does not match panel");
  if (!(initial_balance > 0)) throw ContractError("initial balance must be positive");
  std::vector<double> obs;
  obs.reserve(observation_size(window, n));
  for (std::size_t d = t + 1 - window; d <= t; ++d) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) obs.push_back(panel.zscore(d, j, static_cast<Feature>(f)));
    }
  }
  obs.push_back(portfolio.balance / initial_balance);
  for (std::size_t j = 0; j < n; ++j) {
    obs.push_back(static_cast<double>(portfolio.shares[j]) * panel.price(t, j) / initial_balance);
  }
  return obs;
}

}  // namespace xltrade::market

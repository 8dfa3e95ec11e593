#include "xltrade/market/turbulence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::market {

double turbulence(std::span<const double> history, std::size_t rows, std::span<const double> y) {
  const std::size_t n = y.size();
  if (n == 0 || history.size() != rows * n) throw DimensionError("turbulence history must be rows x n");
  if (rows < n + 2) throw ContractError("turbulence needs at least n + 2 history rows");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> h(history.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd mu = h.colwise().mean().transpose();
  const RowMajor centered = h.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  cov.diagonal().array() += 1e-8;
  const Eigen::VectorXd dev = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n)) - mu;
  const Eigen::VectorXd solved = cov.ldlt().solve(dev);
  return std::max(0.0, dev.dot(solved));
}

TurbulenceSeries TurbulenceSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > values.size()) throw ContractError("turbulence slice out of range");
  TurbulenceSeries out;
  out.values.assign(values.begin() + begin, values.begin() + end);
  out.defined.assign(defined.begin() + begin, defined.begin() + end);
  out.threshold = threshold;
  return out;
}

TurbulenceSeries compute_turbulence(const AlignedPanel& panel, std::size_t lookback) {
  const std::size_t days = panel.n_days();
  const std::size_t n = panel.n_tickers();
  if (lookback < n + 2) throw ContractError("turbulence lookback must be at least n + 2");
  // returns[s] is the return from day s-1 to s; row 0 is unused.
  std::vector<double> returns(days * n, 0.0);
  for (std::size_t s = 1; s < days; ++s) {
    for (std::size_t j = 0; j < n; ++j) returns[s * n + j] = panel.price(s, j) / panel.price(s - 1, j) - 1.0;
  }
  TurbulenceSeries out;
  out.values.assign(days, 0.0);
  out.defined.assign(days, false);
  for (std::size_t t = lookback + 1; t < days; ++t) {
    const std::span<const double> hist(returns.data() + (t - lookback) * n, lookback * n);
    out.values[t] = turbulence(hist, lookback, std::span<const double>(returns.data() + t * n, n));
    out.defined[t] = true;
  }
  return out;
}

double turbulence_threshold(const TurbulenceSeries& series, std::size_t begin, std::size_t end, double percentile) {
  if (begin > end || end > series.values.size()) throw ContractError("threshold range out of bounds");
  if (!(percentile >= 0 && percentile <= 100)) throw ContractError("percentile must be in [0, 100]");
  std::vector<double> v;
  for (std::size_t t = begin; t < end; ++t) {
    if (series.defined[t]) v.push_back(series.values[t]);
  }
  if (v.empty()) return std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  const double pos = percentile / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace xltrade::market

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "xltrade/market/panel.hpp"

namespace xltrade::market {

inline constexpr std::size_t kTurbulenceLookback = 252;
inline constexpr double kTurbulencePercentile = 99.0;

/// Mahalanobis distance of y from the row distribution of history (rows x n,
/// row-major). Requires rows >= n + 2.
double turbulence(std::span<const double> history, std::size_t rows, std::span<const double> y);

struct TurbulenceSeries {
  std::vector<double> values;  // 0 where the trailing history is too short
  std::vector<bool> defined;
  double threshold = std::numeric_limits<double>::infinity();

  bool turbulent(std::size_t day) const { return values[day] > threshold; }
  TurbulenceSeries slice(std::size_t begin, std::size_t end) const;
};

/// Turbulence of adj_close simple returns, each day against its trailing lookback days.
TurbulenceSeries compute_turbulence(const AlignedPanel& panel, std::size_t lookback = kTurbulenceLookback);

/// Linear-interpolated percentile of the defined values in [begin, end); +inf when none are defined.
double turbulence_threshold(const TurbulenceSeries& series, std::size_t begin, std::size_t end,
                            double percentile = kTurbulencePercentile);

}  // namespace xltrade::market

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "xltrade/market/ohlcv.hpp"

namespace xltrade::market {

enum Feature : std::size_t { kOpen, kHigh, kLow, kClose, kAdjClose, kVolume };
inline constexpr std::size_t kFeatureCount = 6;

struct TickerBars {
  std::string symbol;
  std::vector<OhlcvBar> bars;
};

/// Per ticker, per feature mean and std of the transformed features (volume is log1p'd).
struct NormalizationStats {
  std::vector<double> mean;  // tickers x features
  std::vector<double> std;

  bool empty() const { return mean.empty(); }
  bool operator==(const NormalizationStats&) const = default;
};

/// Raw feature value as fed to the z-score: volume goes through log1p.
double transform_feature(Feature f, double raw);

class AlignedPanel {
 public:
  AlignedPanel() = default;
  AlignedPanel(std::vector<Date> dates, std::vector<std::string> tickers, std::vector<double> cube);

  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<std::string>& tickers() const { return tickers_; }
  std::size_t n_days() const { return dates_.size(); }
  std::size_t n_tickers() const { return tickers_.size(); }

  double at(std::size_t day, std::size_t ticker, Feature f) const {
    return cube_[(day * tickers_.size() + ticker) * kFeatureCount + f];
  }
  double price(std::size_t day, std::size_t ticker) const { return at(day, ticker, kAdjClose); }
  std::vector<double> prices(std::size_t day) const;

  const NormalizationStats& stats() const { return stats_; }
  void set_stats(NormalizationStats stats);
  double zscore(std::size_t day, std::size_t ticker, Feature f) const;

  /// Copy of days [begin, end); stats carry over.
  AlignedPanel slice(std::size_t begin, std::size_t end) const;

  /// Half-open index range of days within [first, last] inclusive.
  std::pair<std::size_t, std::size_t> index_range(Date first, Date last) const;

  std::vector<TickerBars> to_bars() const;

  bool operator==(const AlignedPanel&) const = default;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> tickers_;
  std::vector<double> cube_;
  NormalizationStats stats_;
};

/// Keeps the dates common to every ticker, preserving ticker order.
AlignedPanel align(const std::vector<TickerBars>& per_ticker);

/// Population mean/std over days [begin, end); std below 1e-12 is replaced by 1.
NormalizationStats fit_normalization(const AlignedPanel& panel, std::size_t begin, std::size_t end);

}  // namespace xltrade::market

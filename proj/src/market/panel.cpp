#include "xltrade/market/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::market {

double transform_feature(Feature f, double raw) { return f == kVolume ? std::log1p(raw) : raw; }

AlignedPanel::AlignedPanel(std::vector<Date> dates, std::vector<std::string> tickers, std::vector<double> cube)
    : dates_(std::move(dates)), tickers_(std::move(tickers)), cube_(std::move(cube)) {
  if (cube_.size() != dates_.size() * tickers_.size() * kFeatureCount) {
    throw DimensionError("panel cube size does not match dates x tickers x features");
  }
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) throw DataError("panel dates must be strictly increasing");
  }
}

std::vector<double> AlignedPanel::prices(std::size_t day) const {
  std::vector<double> out(n_tickers());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = price(day, j);
  return out;
}

void AlignedPanel::set_stats(NormalizationStats stats) {
  const std::size_t n = n_tickers() * kFeatureCount;
  if (stats.mean.size() != n || stats.std.size() != n) throw DimensionError("normalization stats size mismatch");
  stats_ = std::move(stats);
}

double AlignedPanel::zscore(std::size_t day, std::size_t ticker, Feature f) const {
  if (stats_.empty()) throw ContractError("panel has no normalization stats");
  const std::size_t k = ticker * kFeatureCount + f;
  return (transform_feature(f, at(day, ticker, f)) - stats_.mean[k]) / stats_.std[k];
}

AlignedPanel AlignedPanel::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n_days()) throw ContractError("slice out of range");
  const std::size_t row = n_tickers() * kFeatureCount;
  AlignedPanel out(std::vector<Date>(dates_.begin() + begin, dates_.begin() + end), tickers_,
                   std::vector<double>(cube_.begin() + begin * row, cube_.begin() + end * row));
  out.stats_ = stats_;
  return out;
}

std::pair<std::size_t, std::size_t> AlignedPanel::index_range(Date first, Date last) const {
  const auto lo = std::lower_bound(dates_.begin(), dates_.end(), first);
  const auto hi = std::upper_bound(dates_.begin(), dates_.end(), last);
  const auto b = static_cast<std::size_t>(lo - dates_.begin());
  return {b, std::max(b, static_cast<std::size_t>(hi - dates_.begin()))};
}

std::vector<TickerBars> AlignedPanel::to_bars() const {
  std::vector<TickerBars> out;
  for (std::size_t j = 0; j < n_tickers(); ++j) {
    TickerBars tb{tickers_[j], {}};
    for (std::size_t d = 0; d < n_days(); ++d) {
      tb.bars.push_back({dates_[d], at(d, j, kOpen), at(d, j, kHigh), at(d, j, kLow), at(d, j, kClose),
                         at(d, j, kAdjClose), at(d, j, kVolume)});
    }
    out.push_back(std::move(tb));
  }
  return out;
}

AlignedPanel align(const std::vector<TickerBars>& per_ticker) {
  if (per_ticker.empty()) throw DataError("no tickers to align");
  std::map<Date, std::size_t> counts;
  for (const auto& t : per_ticker) {
    if (t.bars.empty()) throw DataError("ticker " + t.symbol + " has no bars");
    for (const auto& b : t.bars) ++counts[b.date];
  }
  std::vector<Date> dates;
  for (const auto& [d, c] : counts) {
    if (c == per_ticker.size()) dates.push_back(d);
  }
  if (dates.empty()) throw DataError("tickers share no common dates");

  const std::size_t n = per_ticker.size();
  std::vector<double> cube(dates.size() * n * kFeatureCount);
  std::vector<std::string> tickers;
  for (std::size_t j = 0; j < n; ++j) {
    tickers.push_back(per_ticker[j].symbol);
    std::size_t d = 0;
    for (const auto& b : per_ticker[j].bars) {
      if (d < dates.size() && b.date == dates[d]) {
        double* cell = &cube[(d * n + j) * kFeatureCount];
        cell[kOpen] = b.open;
        cell[kHigh] = b.high;
        cell[kLow] = b.low;
        cell[kClose] = b.close;
        cell[kAdjClose] = b.adj_close;
        cell[kVolume] = b.volume;
        ++d;
      }
    }
    if (d != dates.size()) throw DataError("ticker " + per_ticker[j].symbol + " dates are not sorted");
  }
  return AlignedPanel(std::move(dates), std::move(tickers), std::move(cube));
}

NormalizationStats fit_normalization(const AlignedPanel& panel, std::size_t begin, std::size_t end) {
  if (begin >= end || end > panel.n_days()) throw ContractError("normalization range is empty or out of bounds");
  const std::size_t n = panel.n_tickers();
  NormalizationStats s{std::vector<double>(n * kFeatureCount, 0.0), std::vector<double>(n * kFeatureCount, 0.0)};
  const double count = static_cast<double>(end - begin);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto feat = static_cast<Feature>(f);
      double sum = 0;
      for (std::size_t d = begin; d < end; ++d) sum += transform_feature(feat, panel.at(d, j, feat));
      const double mean = sum / count;
      double sq = 0;
      for (std::size_t d = begin; d < end; ++d) {
        const double dev = transform_feature(feat, panel.at(d, j, feat)) - mean;
        sq += dev * dev;
      }
      const double sd = std::sqrt(sq / count);
      s.mean[j * kFeatureCount + f] = mean;
      s.std[j * kFeatureCount + f] = sd < 1e-12 ? 1.0 : sd;
    }
  }
  return s;
}

}  // namespace xltrade::market

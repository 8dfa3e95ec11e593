#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xltrade/market/panel.hpp"
#include "xltrade/market/turbulence.hpp"

namespace xltrade::market {

/// Inclusive train and test date ranges.
struct SplitDates {
  Date train_start = Date::parse("2009-01-01");
  Date train_end = Date::parse("2022-01-01");
  Date test_start = Date::parse("2022-01-02");
  Date test_end = Date::parse("2023-01-01");

  void validate() const;
  bool operator==(const SplitDates&) const = default;
};

struct ManifestEntry {
  std::string symbol;
  std::filesystem::path file;  // relative paths resolve against the manifest directory
};

struct Manifest {
  std::vector<ManifestEntry> tickers;
  SplitDates splits;
  std::filesystem::path base_dir;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

std::vector<TickerBars> load_bars(const Manifest& manifest);

struct MarketSplit {
  AlignedPanel panel;
  TurbulenceSeries turbulence;
};

struct Dataset {
  MarketSplit train;
  MarketSplit test;
};

/// Computes turbulence on the full panel, fits normalization and the threshold
/// on the training range, then slices both splits.
Dataset build_dataset(const AlignedPanel& full, const SplitDates& splits,
                      std::optional<double> threshold_override = std::nullopt,
                      std::size_t lookback = kTurbulenceLookback);

}  // namespace xltrade::market

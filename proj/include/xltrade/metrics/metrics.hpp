#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xltrade::metrics {

inline constexpr double kTradingDaysPerYear = 252.0;

/// Total asset value over time; values[0] is the initial balance.
struct EquityCurve {
  std::vector<std::string> dates;
  std::vector<double> values;

  void validate() const;
};

/// Percentages throughout: 53.11 means 53.11%.
double cumulative_return(std::span<const double> curve);
double max_earning_rate(std::span<const double> curve);
/// Largest running-peak drawdown, as a nonnegative percentage.
double max_pullback(std::span<const double> curve);

/// Profit per trade; undefined without trades.
std::optional<double> appt(double p_init, double p_final, std::int64_t n_trades);

std::vector<double> simple_returns(std::span<const double> curve);

/// Annualized; sample std. Undefined for fewer than two returns or zero spread.
std::optional<double> sharpe(std::span<const double> returns, double risk_free = 0.0,
                             double annualization = kTradingDaysPerYear);

struct PerformanceReport {
  double cr = 0;
  double mer = 0;
  double mpb = 0;
  std::optional<double> appt;
  std::optional<double> sharpe;
  std::int64_t n_trades = 0;

  /// Keys cr, mer, mpb, appt, sharpe, n_trades; undefined values are null.
  std::string to_json(int indent = 2) const;
};

PerformanceReport evaluate(const EquityCurve& curve, std::int64_t n_trades);

void write_equity_csv(const std::filesystem::path& path, const EquityCurve& curve);

}  // namespace xltrade::metrics

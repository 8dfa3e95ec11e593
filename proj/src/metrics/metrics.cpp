#include "xltrade/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::metrics {

namespace {

void require_curve(std::span<const double> curve) {
  if (curve.empty()) throw ContractError("equity curve is empty");
  for (double v : curve) {
    if (!(v > 0) || !std::isfinite(v)) throw ContractError("equity values must be positive and finite");
  }
}

}  // namespace

void EquityCurve::validate() const {
  if (dates.size() != values.size()) throw DimensionError("equity curve dates and values differ in length");
  require_curve(values);
}

double cumulative_return(std::span<const double> curve) {
  require_curve(curve);
  return 100.0 * (curve.back() - curve.front()) / curve.front();
}

double max_earning_rate(std::span<const double> curve) {
  require_curve(curve);
  return 100.0 * (*std::max_element(curve.begin(), curve.end()) - curve.front()) / curve.front();
}

double max_pullback(std::span<const double> curve) {
  require_curve(curve);
  double peak = curve.front();
  double worst = 0.0;
  for (double v : curve) {
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return 100.0 * worst;
}

std::optional<double> appt(double p_init, double p_final, std::int64_t n_trades) {
  if (n_trades <= 0) return std::nullopt;
  return (p_final - p_init) / static_cast<double>(n_trades);
}

std::vector<double> simple_returns(std::span<const double> curve) {
  std::vector<double> out;
  for (std::size_t i = 1; i < curve.size(); ++i) out.push_back(curve[i] / curve[i - 1] - 1.0);
  return out;
}

std::optional<double> sharpe(std::span<const double> returns, double risk_free, double annualization) {
  if (returns.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(returns.size());
  double mean = 0;
  for (double r : returns) mean += r;
  mean /= n;
  double sq = 0;
  for (double r : returns) sq += (r - mean) * (r - mean);
  const double sd = std::sqrt(sq / (n - 1));
  if (!(sd > 0)) return std::nullopt;
  return std::sqrt(annualization) * (mean - risk_free) / sd;
}

std::string PerformanceReport::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["cr"] = cr;
  j["mer"] = mer;
  j["mpb"] = mpb;
  j["appt"] = appt ? nlohmann::ordered_json(*appt) : nlohmann::ordered_json(nullptr);
  j["sharpe"] = sharpe ? nlohmann::ordered_json(*sharpe) : nlohmann::ordered_json(nullptr);
  j["n_trades"] = n_trades;
  return j.dump(indent);
}

PerformanceReport evaluate(const EquityCurve& curve, std::int64_t n_trades) {
  curve.validate();
  PerformanceReport r;
  r.cr = cumulative_return(curve.values);
  r.mer = max_earning_rate(curve.values);
  r.mpb = max_pullback(curve.values);
  r.appt = appt(curve.values.front(), curve.values.back(), n_trades);
  r.sharpe = sharpe(simple_returns(curve.values));
  r.n_trades = n_trades;
  return r;
}

void write_equity_csv(const std::filesystem::path& path, const EquityCurve& curve) {
  curve.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "date,total_value\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.17g\n", curve.values[i]);
    out << curve.dates[i] << buf;
  }
}

}  // namespace xltrade::metrics

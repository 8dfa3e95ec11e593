#include "xltrade/market/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::market {

void SplitDates::validate() const {
  if (!(train_start <= train_end)) throw ContractError("train start is after train end");
  if (!(test_start <= test_end)) throw ContractError("test start is after test end");
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Manifest m;
  m.base_dir = path.parent_path();
  try {
    for (const auto& t : j.at("tickers")) {
      m.tickers.push_back({t.at("symbol").get<std::string>(), t.at("file").get<std::string>()});
    }
    const auto date_field = [&](const char* key, Date& out) {
      if (j.contains(key)) out = Date::parse(j.at(key).get<std::string>());
    };
    date_field("train_start", m.splits.train_start);
    date_field("train_end", m.splits.train_end);
    date_field("test_start", m.splits.test_start);
    date_field("test_end", m.splits.test_end);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (m.tickers.empty()) throw DataError(path.string() + ": manifest lists no tickers");
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["tickers"] = nlohmann::ordered_json::array();
  for (const auto& t : manifest.tickers) {
    j["tickers"].push_back({{"symbol", t.symbol}, {"file", t.file.generic_string()}});
  }
  j["train_start"] = manifest.splits.train_start.to_string();
  j["train_end"] = manifest.splits.train_end.to_string();
  j["test_start"] = manifest.splits.test_start.to_string();
  j["test_end"] = manifest.splits.test_end.to_string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<TickerBars> load_bars(const Manifest& manifest) {
  std::vector<TickerBars> out;
  for (const auto& t : manifest.tickers) {
    const auto file = t.file.is_absolute() ? t.file : manifest.base_dir / t.file;
    out.push_back({t.symbol, load_csv(file)});
  }
  return out;
}

Dataset build_dataset(const AlignedPanel& full, const SplitDates& splits, std::optional<double> threshold_override,
                      std::size_t lookback) {
  splits.validate();
  const auto [train_begin, train_end] = full.index_range(splits.train_start, splits.train_end);
  const auto [test_begin, test_end] = full.index_range(splits.test_start, splits.test_end);
  if (train_begin == train_end) throw DataError("training split contains no trading days");
  if (test_begin == test_end) throw DataError("test split contains no trading days");

  AlignedPanel normalized = full;
  normalized.set_stats(fit_normalization(full, train_begin, train_end));
  TurbulenceSeries turb = compute_turbulence(full, lookback);
  turb.threshold = threshold_override ? *threshold_override : turbulence_threshold(turb, train_begin, train_end);

  return Dataset{{normalized.slice(train_begin, train_end), turb.slice(train_begin, train_end)},
                 {normalized.slice(test_begin, test_end), turb.slice(test_begin, test_end)}};
}

}  // namespace xltrade::market

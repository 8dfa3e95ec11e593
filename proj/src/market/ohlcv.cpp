#include "xltrade/market/ohlcv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace xltrade::market {

namespace {

double parse_number(std::string_view field, const std::string& where) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(where + ": cannot parse number '" + std::string(field) + "'");
  }
  return value;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

void validate_bar(const OhlcvBar& bar) {
  if (!(bar.open > 0 && bar.high > 0 && bar.low > 0 && bar.close > 0 && bar.adj_close > 0)) {
    throw DataError(bar.date.to_string() + ": prices must be positive");
  }
  if (!(bar.volume >= 0)) throw DataError(bar.date.to_string() + ": negative volume");
  if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close)) {
    throw DataError(bar.date.to_string() + ": high/low do not bracket open and close");
  }
}

std::vector<OhlcvBar> parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != kYahooHeader) {
    throw ParseError(source + ":1: expected header '" + std::string(kYahooHeader) + "'");
  }
  std::vector<OhlcvBar> bars;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      fields.push_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 7) throw ParseError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
    OhlcvBar bar;
    try {
      bar.date = Date::parse(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(where + ": " + e.what());
    }
    bar.open = parse_number(fields[1], where);
    bar.high = parse_number(fields[2], where);
    bar.low = parse_number(fields[3], where);
    bar.close = parse_number(fields[4], where);
    bar.adj_close = parse_number(fields[5], where);
    bar.volume = parse_number(fields[6], where);
    try {
      validate_bar(bar);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!bars.empty() && !(bars.back().date < bar.date)) {
      throw DataError(where + ": dates not strictly increasing at " + bar.date.to_string());
    }
    bars.push_back(bar);
  }
  return bars;
}

std::vector<OhlcvBar> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<OhlcvBar>& bars) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kYahooHeader << '\n';
  char buf[256];
  for (const auto& b : bars) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.0f\n", b.date.to_string().c_str(), b.open, b.high,
                  b.low, b.close, b.adj_close, b.volume);
    out << buf;
  }
}

}  // namespace xltrade::market

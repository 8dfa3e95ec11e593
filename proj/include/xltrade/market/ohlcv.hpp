#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "xltrade/market/date.hpp"

namespace xltrade::market {

/// Malformed input text; the message carries the line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a data invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kYahooHeader = "Date,Open,High,Low,Close,Adj Close,Volume";

struct OhlcvBar {
  Date date;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
  double adj_close = 0;
  double volume = 0;
};

/// Throws DataError when prices are not positive, volume is negative, or the
/// high/low range does not contain open and close.
void validate_bar(const OhlcvBar& bar);

/// Reads a Yahoo-format daily CSV. Dates must be strictly increasing.
std::vector<OhlcvBar> load_csv(const std::filesystem::path& path);
std::vector<OhlcvBar> parse_csv(const std::string& text, const std::string& source = "<memory>");
void write_csv(const std::filesystem::path& path, const std::vector<OhlcvBar>& bars);

}  // namespace xltrade::market

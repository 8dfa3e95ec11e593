#include "xltrade/market/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace xltrade::market {

namespace {

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw std::invalid_argument("bad date field");
  return value;
}

}  // namespace

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw std::invalid_argument("date must be YYYY-MM-DD: '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int(text.substr(0, 4))}, month{static_cast<unsigned>(parse_int(text.substr(5, 2)))},
                           day{static_cast<unsigned>(parse_int(text.substr(8, 2)))}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
  return {static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

std::string Date::to_string() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

unsigned Date::weekday() const {
  using namespace std::chrono;
  return std::chrono::weekday{sys_days{std::chrono::days{days}}}.c_encoding();
}

}  // namespace xltrade::market

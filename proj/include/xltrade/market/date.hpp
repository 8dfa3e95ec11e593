#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace xltrade::market {

/// Calendar day, stored as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  /// Parses YYYY-MM-DD; throws std::invalid_argument otherwise.
  static Date parse(std::string_view text);
  std::string to_string() const;
  /// 0 = Sunday ... 6 = Saturday.
  unsigned weekday() const;
  Date plus_days(std::int32_t n) const { return {days + n}; }

  auto operator<=>(const Date&) const = default;
};

}  // namespace xltrade::market

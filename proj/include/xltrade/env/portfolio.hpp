#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace xltrade::env {

struct PortfolioState {
  double balance = 0;
  std::vector<std::int64_t> shares;
  std::size_t day = 0;
  double prev_total_value = 0;
};

}  // namespace xltrade::env

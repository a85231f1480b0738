// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace egb {

/// Policy cost of one search. Token counts are proxies: characters / 4 of
/// the rendered prompt and of the returned action text.
struct CostLedger {
  std::int64_t generation_calls = 0;
  std::int64_t lightweight_forward_calls = 0;
  std::int64_t input_token_proxy = 0;
  std::int64_t output_token_proxy = 0;
  std::int64_t branches_executed = 0;
  double wall_time_s = 0.0;

  CostLedger& operator+=(const CostLedger& o) {
    generation_calls += o.generation_calls;
    lightweight_forward_calls += o.lightweight_forward_calls;
    input_token_proxy += o.input_token_proxy;
    output_token_proxy += o.output_token_proxy;
    branches_executed += o.branches_executed;
    wall_time_s += o.wall_time_s;
    return *this;
  }
};

constexpr std::int64_t token_proxy(std::size_t chars) { return static_cast<std::int64_t>(chars / 4); }

}  // namespace egb

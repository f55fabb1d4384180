#pragma once

#include <cstdint>
#include <vector>

#include "meco/knowledge/types.hpp"

namespace meco::indicator {

struct IndicatorCount {
  knowledge::Indicator indicator;
  std::uint64_t count = 0;

  friend bool operator==(const IndicatorCount&, const IndicatorCount&) = default;
};

// Per-indicator occurrence counts for one document against one problem.
// counts follows the problem's indicator order, one entry per indicator.
struct IndicatorReport {
  DocumentId document;
  ProblemId problem;
  std::vector<IndicatorCount> counts;
  std::uint64_t token_count = 0;

  std::size_t matched() const noexcept {
    std::size_t n = 0;
    for (const auto& c : counts) {
      n += c.count > 0 ? 1 : 0;
    }
    return n;
  }

  // matched() / counts.size(), or 0 when there are no indicators.
  double coverage() const noexcept {
    return counts.empty() ? 0.0 : static_cast<double>(matched()) / static_cast<double>(counts.size());
  }

  friend bool operator==(const IndicatorReport&, const IndicatorReport&) = default;
};

}  // namespace meco::indicator

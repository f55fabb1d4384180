#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meco/indicator/report.hpp"
#include "meco/knowledge/types.hpp"

namespace meco::indicator {

// Case-folded tokens: maximal runs of Unicode letters and digits.
std::vector<std::string> tokenize(std::string_view text);

// Overlapping occurrences of `phrase` as a contiguous run inside `tokens`.
// An empty phrase never matches.
std::uint64_t count_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase);

// Counts every indicator value (as a token phrase) in `text`. document and
// problem ids of the result are left empty.
IndicatorReport analyze(std::string_view text, std::span<const knowledge::Indicator> indicators);

IndicatorReport analyze_document(const knowledge::DocumentRecord& doc, const knowledge::ProblemDefinition& problem);

}  // namespace meco::indicator

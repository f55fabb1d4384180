#include "meco/indicator/analyzer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace meco::indicator {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c >= 0 && u_isalnum(c)) {
      c = u_foldCase(c, U_FOLD_CASE_DEFAULT);
      uint8_t buf[4];
      int32_t n = 0;
      UBool error = false;
      U8_APPEND(buf, n, 4, c, error);
      (void)error;
      current.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

std::uint64_t count_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase) {
  const std::size_t m = phrase.size();
  if (m == 0 || tokens.size() < m) {
    return 0;
  }
  // KMP failure table over the phrase.
  std::vector<std::size_t> fail(m, 0);
  for (std::size_t i = 1, k = 0; i < m; ++i) {
    while (k > 0 && phrase[i] != phrase[k]) {
      k = fail[k - 1];
    }
    if (phrase[i] == phrase[k]) {
      ++k;
    }
    fail[i] = k;
  }
  std::uint64_t count = 0;
  std::size_t k = 0;
  for (const auto& token : tokens) {
    while (k > 0 && token != phrase[k]) {
      k = fail[k - 1];
    }
    if (token == phrase[k]) {
      ++k;
    }
    if (k == m) {
      ++count;
      k = fail[k - 1];
    }
  }
  return count;
}

IndicatorReport analyze(std::string_view text, std::span<const knowledge::Indicator> indicators) {
  IndicatorReport report;
  auto tokens = tokenize(text);
  report.token_count = tokens.size();
  report.counts.reserve(indicators.size());
  for (const auto& indicator : indicators) {
    auto phrase = tokenize(indicator.value);
    report.counts.push_back({indicator, count_phrase(tokens, phrase)});
  }
  return report;
}

IndicatorReport analyze_document(const knowledge::DocumentRecord& doc, const knowledge::ProblemDefinition& problem) {
  auto report = analyze(doc.fetched_text, problem.indicators);
  report.document = doc.id;
  report.problem = problem.id;
  return report;
}

}  // namespace meco::indicator

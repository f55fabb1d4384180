#include "meco/knowledge/types.hpp"

#include <unordered_set>

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"

namespace meco::knowledge {

std::string_view to_string(AnnotationKind kind) noexcept {
  switch (kind) {
    case AnnotationKind::clarification: return "clarification";
    case AnnotationKind::sub_problem_proposal: return "sub_problem_proposal";
    case AnnotationKind::evaluation: return "evaluation";
  }
  return "";
}

std::optional<AnnotationKind> parse_annotation_kind(std::string_view name) noexcept {
  for (auto kind : {AnnotationKind::clarification, AnnotationKind::sub_problem_proposal,
                    AnnotationKind::evaluation}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

std::string_view to_string(EntityRef::Type type) noexcept {
  return type == EntityRef::Type::problem ? "problem" : "document";
}

void validate_indicator(const Indicator& indicator) {
  if (trim(indicator.attribute).empty() || trim(indicator.value).empty()) {
    throw Error(ErrorCode::invalid_argument, "indicator attribute and value must be non-empty");
  }
}

void validate_source(const InformationSource& source) {
  if (source.is_person()) {
    if (trim(std::string_view(source.locator).substr(kPersonLocatorPrefix.size())).empty()) {
      throw Error(ErrorCode::invalid_argument, "person source needs a display name");
    }
    return;
  }
  if (!is_absolute_url(source.locator)) {
    throw Error(ErrorCode::invalid_argument,
                "source locator must be an absolute URL or person:<name>: " + source.locator);
  }
}

void validate_problem(const ProblemDefinition& problem) {
  if (problem.id.empty()) {
    throw Error(ErrorCode::invalid_argument, "problem id is empty");
  }
  if (trim(problem.statement).empty()) {
    throw Error(ErrorCode::empty_statement, "problem statement is empty");
  }
  for (const auto& indicator : problem.indicators) {
    validate_indicator(indicator);
  }
  for (const auto& source : problem.sources) {
    validate_source(source);
  }
  if (dedupe_keywords(problem.keywords) != problem.keywords) {
    throw Error(ErrorCode::invalid_argument, "keywords contain duplicates or blanks");
  }
  std::unordered_set<std::string> seen;
  for (const auto& child : problem.sub_problems) {
    if (child == problem.id || !seen.insert(child.str()).second) {
      throw Error(ErrorCode::invalid_argument, "sub-problem list repeats an id or names the problem itself");
    }
  }
}

std::vector<std::string> dedupe_keywords(const std::vector<std::string>& keywords) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& raw : keywords) {
    auto keyword = std::string(trim(raw));
    if (keyword.empty()) {
      continue;
    }
    if (seen.insert(fold_case(keyword)).second) {
      out.push_back(std::move(keyword));
    }
  }
  return out;
}

}  // namespace meco::knowledge

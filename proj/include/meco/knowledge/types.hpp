#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "meco/core/ids.hpp"
#include "meco/core/time.hpp"

namespace meco::knowledge {

// An attribute-value pair the collaborators expect to find in a relevant
// document. Only the value is matched against text; the attribute is a label.
struct Indicator {
  std::string attribute;
  std::string value;

  friend bool operator==(const Indicator&, const Indicator&) = default;
};

inline constexpr std::string_view kPersonLocatorPrefix = "person:";

// Where to look: a system (absolute URL) or a person ("person:<name>").
struct InformationSource {
  std::string name;
  std::string locator;

  bool is_person() const noexcept { return locator.starts_with(kPersonLocatorPrefix); }

  friend bool operator==(const InformationSource&, const InformationSource&) = default;
};

struct ProblemDefinition {
  ProblemId id;
  std::string statement;
  std::string objective;
  Timestamp timestamp;
  std::set<std::string> domains;
  std::vector<std::string> keywords;
  std::vector<InformationSource> sources;
  std::vector<Indicator> indicators;
  std::vector<ProblemId> sub_problems;
  std::map<std::string, std::string> extra_attributes;

  friend bool operator==(const ProblemDefinition&, const ProblemDefinition&) = default;
};

enum class AnnotationKind { clarification, sub_problem_proposal, evaluation };

std::string_view to_string(AnnotationKind kind) noexcept;
std::optional<AnnotationKind> parse_annotation_kind(std::string_view name) noexcept;

// Reference to exactly one annotatable entity.
struct EntityRef {
  enum class Type { problem, document };

  Type type = Type::problem;
  std::string id;

  static EntityRef problem(const ProblemId& id) { return {Type::problem, id.str()}; }
  static EntityRef document(const DocumentId& id) { return {Type::document, id.str()}; }

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

std::string_view to_string(EntityRef::Type type) noexcept;

struct AnnotationRecord {
  AnnotationId id;
  UserId author;
  EntityRef target;
  std::string body;
  AnnotationKind kind = AnnotationKind::clarification;
  Timestamp timestamp;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct DocumentRecord {
  DocumentId id;
  std::string url;
  std::string title;
  std::string fetched_text;
  UserId first_viewer;
  Timestamp timestamp;

  friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

// Field checks. Each throws meco::Error naming the first violated rule.
void validate_indicator(const Indicator& indicator);
void validate_source(const InformationSource& source);
void validate_problem(const ProblemDefinition& problem);

// Keeps the first occurrence of each keyword under case-insensitive
// comparison, trimmed; blank entries are dropped.
std::vector<std::string> dedupe_keywords(const std::vector<std::string>& keywords);

}  // namespace meco::knowledge

#pragma once

#include <optional>
#include <string>
#include <variant>

#include "meco/core/ids.hpp"
#include "meco/core/time.hpp"
#include "meco/fetch/result.hpp"
#include "meco/indicator/report.hpp"
#include "meco/knowledge/activity.hpp"
#include "meco/knowledge/types.hpp"

namespace meco::knowledge {

// Payload records, one per ActivityKind. Each carries everything the
// repository fold needs, so replaying the log never consults anything else.

struct ChatMessage {
  std::string body;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ViewSync {
  UserId leader;
  DocumentId document;
  friend bool operator==(const ViewSync&, const ViewSync&) = default;
};

struct ProblemEdit {
  enum class Op { create, revise };
  Op op = Op::create;
  // Full problem after the edit.
  ProblemDefinition problem;
  friend bool operator==(const ProblemEdit&, const ProblemEdit&) = default;
};

struct AnnotationAdded {
  AnnotationRecord annotation;
  // Set when the annotation records an agreed decomposition; the child is
  // created and appended to the annotated problem's sub_problems.
  std::optional<ProblemDefinition> sub_problem;
  friend bool operator==(const AnnotationAdded&, const AnnotationAdded&) = default;
};

struct QuerySubmitted {
  std::string query;
  std::string source;
  friend bool operator==(const QuerySubmitted&, const QuerySubmitted&) = default;
};

struct TagAdded {
  DocumentId document;
  std::string tag;
  friend bool operator==(const TagAdded&, const TagAdded&) = default;
};

struct MetadataAdded {
  DocumentId document;
  std::string name;
  std::string value;
  friend bool operator==(const MetadataAdded&, const MetadataAdded&) = default;
};

struct ClassificationAdded {
  DocumentId document;
  std::string category;
  friend bool operator==(const ClassificationAdded&, const ClassificationAdded&) = default;
};

struct HistoryViewed {
  std::uint64_t entries = 0;
  friend bool operator==(const HistoryViewed&, const HistoryViewed&) = default;
};

struct FetchOutcome {
  fetch::FetchStatus status = fetch::FetchStatus::ok;
  int http_code = 0;
  friend bool operator==(const FetchOutcome&, const FetchOutcome&) = default;
};

struct DocumentOpened {
  DocumentRecord document;
  bool created = false;
  std::optional<indicator::IndicatorReport> report;
  // Present when this open triggered a fetch.
  std::optional<FetchOutcome> fetch;
  friend bool operator==(const DocumentOpened&, const DocumentOpened&) = default;
};

// Alternative order mirrors ActivityKind, so the kind is the variant index.
using ActivityPayload = std::variant<ChatMessage, ViewSync, ProblemEdit, AnnotationAdded, QuerySubmitted,
                                     TagAdded, MetadataAdded, ClassificationAdded, HistoryViewed,
                                     DocumentOpened>;

static_assert(std::variant_size_v<ActivityPayload> == kAllActivityKinds.size());

constexpr ActivityKind kind_of(const ActivityPayload& payload) noexcept {
  return static_cast<ActivityKind>(payload.index());
}

struct ActivityEvent {
  Seq seq = 0;
  UserId actor;
  WorkspaceId workspace;
  Timestamp timestamp;
  ActivityPayload payload;

  ActivityKind kind() const noexcept { return kind_of(payload); }
  KnowledgeProcess process() const noexcept { return classify_activity(kind()); }

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

}  // namespace meco::knowledge

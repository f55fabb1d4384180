#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace meco::knowledge {

// Closed set of collaborative actions the service captures. Clients cannot
// introduce new kinds; unknown names are rejected where they are parsed.
enum class ActivityKind {
  chat_message,
  view_sync,
  problem_edit,
  annotation_added,
  query_submitted,
  tag_added,
  metadata_added,
  classification_added,
  history_viewed,
  document_opened,
};

inline constexpr std::array kAllActivityKinds{
    ActivityKind::chat_message,    ActivityKind::view_sync,        ActivityKind::problem_edit,
    ActivityKind::annotation_added, ActivityKind::query_submitted, ActivityKind::tag_added,
    ActivityKind::metadata_added,  ActivityKind::classification_added, ActivityKind::history_viewed,
    ActivityKind::document_opened,
};

// Nonaka's knowledge-conversion processes.
enum class KnowledgeProcess {
  socialization,    // tacit -> tacit
  externalization,  // tacit -> explicit
  combination,      // explicit -> explicit
  internalization,  // explicit -> tacit
};

inline constexpr std::array kAllKnowledgeProcesses{
    KnowledgeProcess::socialization,
    KnowledgeProcess::externalization,
    KnowledgeProcess::combination,
    KnowledgeProcess::internalization,
};

constexpr KnowledgeProcess classify_activity(ActivityKind kind) noexcept {
  switch (kind) {
    // interpersonal communication, synchronous interface sharing
    case ActivityKind::chat_message:
    case ActivityKind::view_sync:
      return KnowledgeProcess::socialization;
    // problem definition and clarification, annotation
    case ActivityKind::problem_edit:
    case ActivityKind::annotation_added:
      return KnowledgeProcess::externalization;
    // query formulation, tagging, metadata creation, classification
    case ActivityKind::query_submitted:
    case ActivityKind::tag_added:
    case ActivityKind::metadata_added:
    case ActivityKind::classification_added:
      return KnowledgeProcess::combination;
    // search history, consultation of results
    case ActivityKind::history_viewed:
    case ActivityKind::document_opened:
      return KnowledgeProcess::internalization;
  }
  return KnowledgeProcess::internalization;
}

std::string_view to_string(ActivityKind kind) noexcept;
std::string_view to_string(KnowledgeProcess process) noexcept;
std::optional<ActivityKind> parse_activity_kind(std::string_view name) noexcept;
std::optional<KnowledgeProcess> parse_knowledge_process(std::string_view name) noexcept;

}  // namespace meco::knowledge

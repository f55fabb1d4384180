#include "meco/knowledge/activity.hpp"

namespace meco::knowledge {

std::string_view to_string(ActivityKind kind) noexcept {
  switch (kind) {
    case ActivityKind::chat_message: return "chat_message";
    case ActivityKind::view_sync: return "view_sync";
    case ActivityKind::problem_edit: return "problem_edit";
    case ActivityKind::annotation_added: return "annotation_added";
    case ActivityKind::query_submitted: return "query_submitted";
    case ActivityKind::tag_added: return "tag_added";
    case ActivityKind::metadata_added: return "metadata_added";
    case ActivityKind::classification_added: return "classification_added";
    case ActivityKind::history_viewed: return "history_viewed";
    case ActivityKind::document_opened: return "document_opened";
  }
  return "";
}

std::string_view to_string(KnowledgeProcess process) noexcept {
  switch (process) {
    case KnowledgeProcess::socialization: return "socialization";
    case KnowledgeProcess::externalization: return "externalization";
    case KnowledgeProcess::combination: return "combination";
    case KnowledgeProcess::internalization: return "internalization";
  }
  return "";
}

std::optional<ActivityKind> parse_activity_kind(std::string_view name) noexcept {
  for (auto kind : kAllActivityKinds) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

std::optional<KnowledgeProcess> parse_knowledge_process(std::string_view name) noexcept {
  for (auto process : kAllKnowledgeProcesses) {
    if (to_string(process) == name) {
      return process;
    }
  }
  return std::nullopt;
}

}  // namespace meco::knowledge

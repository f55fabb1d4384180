#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "meco/knowledge/events.hpp"

namespace meco::repository {

struct QueryEntry {
  std::string query;
  std::string source;
  Timestamp timestamp;

  friend bool operator==(const QueryEntry&, const QueryEntry&) = default;
};

// Combination-process annotations on a document.
struct DocumentExtras {
  std::vector<std::string> tags;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> classifications;

  friend bool operator==(const DocumentExtras&, const DocumentExtras&) = default;
};

struct FoldOptions {
  std::size_t query_capacity = 50;
};

using ReportKey = std::pair<DocumentId, ProblemId>;

// Materialized state of one workspace: the left fold of its event log.
struct WorkspaceState {
  WorkspaceId workspace;
  Seq seq = 0;
  Timestamp last_timestamp{};

  std::map<ProblemId, knowledge::ProblemDefinition> problems;
  // Problems created without a parent, in creation order.
  std::vector<ProblemId> roots;
  std::map<AnnotationId, knowledge::AnnotationRecord> annotations;
  std::map<DocumentId, knowledge::DocumentRecord> documents;
  std::map<std::string, DocumentId> document_by_url;
  std::map<ReportKey, indicator::IndicatorReport> reports;
  std::map<DocumentId, DocumentExtras> document_extras;

  // Every user who emitted at least one event here.
  std::set<UserId> participants;
  std::map<UserId, DocumentId> current_document;
  std::map<UserId, std::deque<QueryEntry>> recent_queries;
  std::map<knowledge::KnowledgeProcess, std::uint64_t> process_tally;

  const knowledge::ProblemDefinition* find_problem(const ProblemId& id) const;
  const knowledge::DocumentRecord* find_document(const DocumentId& id) const;
  const knowledge::DocumentRecord* find_document_by_url(const std::string& url) const;

  // Most recently created root problem; indicator reports default to it.
  std::optional<ProblemId> active_problem() const;

  friend bool operator==(const WorkspaceState&, const WorkspaceState&) = default;
};

// Throws Error(invalid_event) when `event` cannot follow `state`: wrong
// sequence number or workspace, references to unknown entities, or payloads
// violating a record invariant. apply_event relies on this having passed.
void check_event(const WorkspaceState& state, const knowledge::ActivityEvent& event);

void apply_event(WorkspaceState& state, const knowledge::ActivityEvent& event, const FoldOptions& options);

nlohmann::json state_to_json(const WorkspaceState& state);
WorkspaceState state_from_json(const nlohmann::json& j);

}  // namespace meco::repository

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meco/knowledge/events.hpp"
#include "meco/repository/repository.hpp"

// Mutations of the shared problem space. Each one is validated against the
// workspace state under its writer lock and recorded as exactly one event.

namespace meco::knowledge {

struct ProblemDraft {
  std::string statement;
  std::string objective;
  std::set<std::string> domains;
  std::vector<std::string> keywords;
  std::vector<InformationSource> sources;
  std::vector<Indicator> indicators;
  std::map<std::string, std::string> extra_attributes;
};

// Fields left empty keep their current value.
struct ProblemRevision {
  std::optional<std::string> statement = std::nullopt;
  std::optional<std::string> objective = std::nullopt;
  std::optional<std::set<std::string>> domains = std::nullopt;
  std::optional<std::vector<std::string>> keywords = std::nullopt;
  std::optional<std::vector<InformationSource>> sources = std::nullopt;
  std::optional<std::vector<Indicator>> indicators = std::nullopt;
  std::optional<std::map<std::string, std::string>> extra_attributes = std::nullopt;
};

ProblemDefinition create_problem(repository::Repository& repo, const WorkspaceId& ws, const UserId& author,
                                 ProblemDraft draft);

ProblemDefinition create_problem(repository::Repository& repo, const WorkspaceId& ws, std::string statement,
                                 std::string objective, const UserId& author);

ProblemDefinition revise_problem(repository::Repository& repo, const ProblemId& id, const ProblemRevision& revision,
                                 const UserId& author);

// Creates the child and records the decomposition as a sub_problem_proposal
// annotation on the parent, in one annotation_added event.
ProblemDefinition add_sub_problem(repository::Repository& repo, const ProblemId& parent, std::string statement,
                                  const UserId& author);

AnnotationRecord annotate(repository::Repository& repo, const EntityRef& target, std::string body,
                          AnnotationKind kind, const UserId& author);

ActivityEvent tag_document(repository::Repository& repo, const DocumentId& doc, std::string tag, const UserId& author);
ActivityEvent add_document_metadata(repository::Repository& repo, const DocumentId& doc, std::string name,
                                    std::string value, const UserId& author);
ActivityEvent classify_document(repository::Repository& repo, const DocumentId& doc, std::string category,
                                const UserId& author);

struct HistoryView {
  // Query and document-open events of the workspace, oldest first.
  std::vector<ActivityEvent> entries;
  ActivityEvent logged;
};

// Viewing the search history is itself an internalization activity and is logged.
HistoryView view_history(repository::Repository& repo, const WorkspaceId& ws, const UserId& viewer);

}  // namespace meco::knowledge

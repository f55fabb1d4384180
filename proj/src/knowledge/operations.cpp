#include "meco/knowledge/operations.hpp"

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"

namespace meco::knowledge {

using repository::Repository;
using repository::WorkspaceState;

namespace {

void require_statement(const std::string& statement) {
  if (trim(statement).empty()) {
    throw Error(ErrorCode::empty_statement, "problem statement is empty");
  }
}

void validate_fields(const std::vector<InformationSource>& sources, const std::vector<Indicator>& indicators) {
  for (const auto& s : sources) {
    validate_source(s);
  }
  for (const auto& i : indicators) {
    validate_indicator(i);
  }
}

std::set<std::string> clean_domains(const std::set<std::string>& domains) {
  std::set<std::string> out;
  for (const auto& d : domains) {
    auto t = std::string(trim(d));
    if (!t.empty()) {
      out.insert(std::move(t));
    }
  }
  return out;
}

WorkspaceId locate_document(const Repository& repo, const DocumentId& doc) {
  auto ws = repo.workspace_of(doc);
  if (!ws) {
    throw Error(ErrorCode::unknown_document, "unknown document: " + doc.str());
  }
  return *ws;
}

void require_text(const std::string& text, const char* what) {
  if (trim(text).empty()) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + " is empty");
  }
}

}  // namespace

ProblemDefinition create_problem(Repository& repo, const WorkspaceId& ws, const UserId& author, ProblemDraft draft) {
  require_statement(draft.statement);
  validate_fields(draft.sources, draft.indicators);
  auto& store = repo.workspace(ws);
  ProblemId id(repo.new_id("p"));
  auto event = store.commit(author, [&](const WorkspaceState&, Timestamp now) -> ActivityPayload {
    ProblemDefinition p;
    p.id = id;
    p.statement = draft.statement;
    p.objective = draft.objective;
    p.timestamp = now;
    p.domains = clean_domains(draft.domains);
    p.keywords = dedupe_keywords(draft.keywords);
    p.sources = draft.sources;
    p.indicators = draft.indicators;
    p.extra_attributes = draft.extra_attributes;
    return ProblemEdit{ProblemEdit::Op::create, std::move(p)};
  });
  return std::get<ProblemEdit>(event.payload).problem;
}

ProblemDefinition create_problem(Repository& repo, const WorkspaceId& ws, std::string statement, std::string objective,
                                 const UserId& author) {
  ProblemDraft draft;
  draft.statement = std::move(statement);
  draft.objective = std::move(objective);
  return create_problem(repo, ws, author, std::move(draft));
}

ProblemDefinition revise_problem(Repository& repo, const ProblemId& id, const ProblemRevision& revision,
                                 const UserId& author) {
  auto ws = repo.workspace_of(id);
  if (!ws) {
    throw Error(ErrorCode::unknown_problem, "unknown problem: " + id.str());
  }
  if (revision.statement) {
    require_statement(*revision.statement);
  }
  validate_fields(revision.sources.value_or(std::vector<InformationSource>{}),
                  revision.indicators.value_or(std::vector<Indicator>{}));
  auto event = repo.commit(*ws, author, [&](const WorkspaceState& state, Timestamp now) -> ActivityPayload {
    const auto* current = state.find_problem(id);
    if (!current) {
      throw Error(ErrorCode::unknown_problem, "unknown problem: " + id.str());
    }
    ProblemDefinition p = *current;
    if (revision.statement) p.statement = *revision.statement;
    if (revision.objective) p.objective = *revision.objective;
    if (revision.domains) p.domains = clean_domains(*revision.domains);
    if (revision.keywords) p.keywords = dedupe_keywords(*revision.keywords);
    if (revision.sources) p.sources = *revision.sources;
    if (revision.indicators) p.indicators = *revision.indicators;
    if (revision.extra_attributes) p.extra_attributes = *revision.extra_attributes;
    p.timestamp = std::max(now, current->timestamp);
    return ProblemEdit{ProblemEdit::Op::revise, std::move(p)};
  });
  return std::get<ProblemEdit>(event.payload).problem;
}

ProblemDefinition add_sub_problem(Repository& repo, const ProblemId& parent, std::string statement,
                                  const UserId& author) {
  auto ws = repo.workspace_of(parent);
  if (!ws) {
    throw Error(ErrorCode::unknown_parent, "unknown parent problem: " + parent.str());
  }
  require_statement(statement);
  ProblemId child_id(repo.new_id("p"));
  AnnotationId annotation_id(repo.new_id("a"));
  auto event = repo.commit(*ws, author, [&](const WorkspaceState& state, Timestamp now) -> ActivityPayload {
    if (!state.find_problem(parent)) {
      throw Error(ErrorCode::unknown_parent, "unknown parent problem: " + parent.str());
    }
    ProblemDefinition child;
    child.id = child_id;
    child.statement = statement;
    child.timestamp = now;
    AnnotationRecord note{annotation_id, author, EntityRef::problem(parent), statement,
                          AnnotationKind::sub_problem_proposal, now};
    return AnnotationAdded{std::move(note), std::move(child)};
  });
  return *std::get<AnnotationAdded>(event.payload).sub_problem;
}

AnnotationRecord annotate(Repository& repo, const EntityRef& target, std::string body, AnnotationKind kind,
                          const UserId& author) {
  std::optional<WorkspaceId> ws = target.type == EntityRef::Type::problem ? repo.workspace_of(ProblemId(target.id))
                                                                          : repo.workspace_of(DocumentId(target.id));
  if (!ws) {
    throw Error(ErrorCode::unknown_target, "unknown annotation target: " + target.id);
  }
  if (trim(body).empty()) {
    throw Error(ErrorCode::empty_body, "annotation body is empty");
  }
  if (kind == AnnotationKind::evaluation && target.type != EntityRef::Type::document) {
    throw Error(ErrorCode::kind_target_mismatch, "evaluations annotate documents, not problems");
  }
  AnnotationId id(repo.new_id("a"));
  auto event = repo.commit(*ws, author, [&](const WorkspaceState&, Timestamp now) -> ActivityPayload {
    return AnnotationAdded{AnnotationRecord{id, author, target, body, kind, now}, std::nullopt};
  });
  return std::get<AnnotationAdded>(event.payload).annotation;
}

ActivityEvent tag_document(Repository& repo, const DocumentId& doc, std::string tag, const UserId& author) {
  require_text(tag, "tag");
  return repo.append_event(locate_document(repo, doc), author, TagAdded{doc, std::string(trim(tag))});
}

ActivityEvent add_document_metadata(Repository& repo, const DocumentId& doc, std::string name, std::string value,
                                    const UserId& author) {
  require_text(name, "metadata name");
  return repo.append_event(locate_document(repo, doc), author,
                           MetadataAdded{doc, std::string(trim(name)), std::move(value)});
}

ActivityEvent classify_document(Repository& repo, const DocumentId& doc, std::string category, const UserId& author) {
  require_text(category, "category");
  return repo.append_event(locate_document(repo, doc), author,
                           ClassificationAdded{doc, std::string(trim(category))});
}

HistoryView view_history(Repository& repo, const WorkspaceId& ws, const UserId& viewer) {
  auto& store = repo.workspace(ws);
  HistoryView view;
  for (auto& event : store.events_since(0)) {
    auto kind = event.kind();
    if (kind == ActivityKind::query_submitted || kind == ActivityKind::document_opened) {
      view.entries.push_back(std::move(event));
    }
  }
  view.logged = store.append(viewer, HistoryViewed{view.entries.size()});
  return view;
}

}  // namespace meco::knowledge

#include "meco/repository/state.hpp"

#include <algorithm>
#include <unordered_set>

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"
#include "meco/knowledge/codec.hpp"

namespace meco::repository {

using namespace meco::knowledge;

const ProblemDefinition* WorkspaceState::find_problem(const ProblemId& id) const {
  auto it = problems.find(id);
  return it == problems.end() ? nullptr : &it->second;
}

const DocumentRecord* WorkspaceState::find_document(const DocumentId& id) const {
  auto it = documents.find(id);
  return it == documents.end() ? nullptr : &it->second;
}

const DocumentRecord* WorkspaceState::find_document_by_url(const std::string& url) const {
  auto it = document_by_url.find(url);
  return it == document_by_url.end() ? nullptr : find_document(it->second);
}

std::optional<ProblemId> WorkspaceState::active_problem() const {
  if (roots.empty()) {
    return std::nullopt;
  }
  return roots.back();
}

namespace {

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::invalid_event, why); }

void require(bool cond, const char* why) {
  if (!cond) {
    reject(why);
  }
}

void validate_or_reject(const ProblemDefinition& p) {
  try {
    validate_problem(p);
  } catch (const Error& e) {
    reject(std::string("invalid problem: ") + e.what());
  }
}

void require_document(const WorkspaceState& s, const DocumentId& id) {
  if (!s.find_document(id)) {
    reject("unknown document " + id.str());
  }
}

struct Checker {
  const WorkspaceState& s;

  void operator()(const ChatMessage& p) const { require(!trim(p.body).empty(), "empty chat body"); }

  void operator()(const ViewSync& p) const {
    require(!p.leader.empty(), "view_sync without leader");
    require_document(s, p.document);
  }

  void operator()(const ProblemEdit& p) const {
    validate_or_reject(p.problem);
    const auto* existing = s.find_problem(p.problem.id);
    if (p.op == ProblemEdit::Op::create) {
      require(existing == nullptr, "problem already exists");
      require(p.problem.sub_problems.empty(), "new problem cannot have sub-problems");
    } else {
      require(existing != nullptr, "revision of unknown problem");
      require(p.problem.timestamp >= existing->timestamp, "problem timestamp moved backwards");
      require(p.problem.sub_problems == existing->sub_problems, "revision cannot change decomposition");
    }
  }

  void operator()(const AnnotationAdded& p) const {
    const auto& a = p.annotation;
    require(!a.id.empty() && !s.annotations.contains(a.id), "annotation id missing or reused");
    require(!a.author.empty(), "annotation without author");
    require(!trim(a.body).empty(), "empty annotation body");
    if (a.target.type == EntityRef::Type::problem) {
      require(s.find_problem(ProblemId(a.target.id)) != nullptr, "annotation target problem unknown");
      require(a.kind != AnnotationKind::evaluation, "evaluation must target a document");
    } else {
      require(s.find_document(DocumentId(a.target.id)) != nullptr, "annotation target document unknown");
    }
    if (p.sub_problem) {
      const auto& child = *p.sub_problem;
      require(a.target.type == EntityRef::Type::problem, "sub-problem must annotate a problem");
      require(a.kind == AnnotationKind::sub_problem_proposal, "sub-problem annotation has wrong kind");
      require(s.find_problem(child.id) == nullptr, "sub-problem id reused");
      require(child.sub_problems.empty(), "new sub-problem cannot have children");
      validate_or_reject(child);
    }
  }

  void operator()(const QuerySubmitted& p) const { require(!trim(p.query).empty(), "empty query"); }

  void operator()(const TagAdded& p) const {
    require_document(s, p.document);
    require(!trim(p.tag).empty(), "empty tag");
  }

  void operator()(const MetadataAdded& p) const {
    require_document(s, p.document);
    require(!trim(p.name).empty(), "empty metadata name");
  }

  void operator()(const ClassificationAdded& p) const {
    require_document(s, p.document);
    require(!trim(p.category).empty(), "empty category");
  }

  void operator()(const HistoryViewed&) const {}

  void operator()(const DocumentOpened& p) const {
    const auto& doc = p.document;
    if (p.created) {
      require(!doc.id.empty() && s.find_document(doc.id) == nullptr, "document id missing or reused");
      require(is_absolute_url(doc.url), "document url is not absolute");
      require(!s.document_by_url.contains(doc.url), "document url already recorded");
      require(!doc.first_viewer.empty(), "document without first viewer");
    } else {
      const auto* existing = s.find_document(doc.id);
      require(existing != nullptr && *existing == doc, "reopened document does not match record");
    }
    if (p.report) {
      require(p.report->document == doc.id, "report names another document");
      const auto* problem = s.find_problem(p.report->problem);
      require(problem != nullptr, "report names unknown problem");
      require(p.report->counts.size() == problem->indicators.size(), "report does not cover indicators");
      for (std::size_t i = 0; i < problem->indicators.size(); ++i) {
        require(p.report->counts[i].indicator == problem->indicators[i], "report indicator order differs");
        require(p.report->counts[i].count <= p.report->token_count, "indicator count exceeds token count");
      }
    }
    if (p.fetch && p.fetch->status != fetch::FetchStatus::ok) {
      require(doc.fetched_text.empty(), "failed fetch with text");
    }
  }
};

struct Applier {
  WorkspaceState& s;
  const ActivityEvent& e;
  const FoldOptions& options;

  void operator()(const ChatMessage&) const {}

  void operator()(const ViewSync& p) const { s.current_document[e.actor] = p.document; }

  void operator()(const ProblemEdit& p) const {
    if (p.op == ProblemEdit::Op::create) {
      s.roots.push_back(p.problem.id);
    }
    s.problems[p.problem.id] = p.problem;
  }

  void operator()(const AnnotationAdded& p) const {
    const auto& a = p.annotation;
    s.annotations[a.id] = a;
    if (a.target.type == EntityRef::Type::problem) {
      auto& target = s.problems.at(ProblemId(a.target.id));
      target.timestamp = std::max(target.timestamp, a.timestamp);
      if (p.sub_problem) {
        target.sub_problems.push_back(p.sub_problem->id);
        s.problems[p.sub_problem->id] = *p.sub_problem;
      }
    }
  }

  void operator()(const QuerySubmitted& p) const {
    auto& queries = s.recent_queries[e.actor];
    queries.push_back({p.query, p.source, e.timestamp});
    while (queries.size() > options.query_capacity) {
      queries.pop_front();
    }
  }

  void operator()(const TagAdded& p) const { s.document_extras[p.document].tags.push_back(p.tag); }

  void operator()(const MetadataAdded& p) const { s.document_extras[p.document].metadata[p.name] = p.value; }

  void operator()(const ClassificationAdded& p) const {
    s.document_extras[p.document].classifications.push_back(p.category);
  }

  void operator()(const HistoryViewed&) const {}

  void operator()(const DocumentOpened& p) const {
    if (p.created) {
      s.documents[p.document.id] = p.document;
      s.document_by_url[p.document.url] = p.document.id;
    }
    if (p.report) {
      s.reports[{p.report->document, p.report->problem}] = *p.report;
    }
    s.current_document[e.actor] = p.document.id;
  }
};

}  // namespace

void check_event(const WorkspaceState& state, const ActivityEvent& event) {
  if (event.workspace != state.workspace) {
    reject("event belongs to workspace " + event.workspace.str());
  }
  if (event.seq != state.seq + 1) {
    reject("expected seq " + std::to_string(state.seq + 1) + ", got " + std::to_string(event.seq));
  }
  if (event.actor.empty()) {
    reject("event without actor");
  }
  std::visit(Checker{state}, event.payload);
}

void apply_event(WorkspaceState& state, const ActivityEvent& event, const FoldOptions& options) {
  std::visit(Applier{state, event, options}, event.payload);
  state.seq = event.seq;
  state.last_timestamp = std::max(state.last_timestamp, event.timestamp);
  state.participants.insert(event.actor);
  ++state.process_tally[event.process()];
}

// Snapshot encoding. Maps keyed by ids become JSON objects; composite keys
// become arrays of entries.

using nlohmann::json;

json state_to_json(const WorkspaceState& s) {
  json problems = json::object();
  for (const auto& [id, p] : s.problems) {
    problems[id.str()] = p;
  }
  json annotations = json::object();
  for (const auto& [id, a] : s.annotations) {
    annotations[id.str()] = a;
  }
  json documents = json::object();
  for (const auto& [id, d] : s.documents) {
    documents[id.str()] = d;
  }
  json reports = json::array();
  for (const auto& [key, r] : s.reports) {
    reports.push_back(r);
  }
  json extras = json::object();
  for (const auto& [id, x] : s.document_extras) {
    extras[id.str()] = {{"tags", x.tags}, {"metadata", x.metadata}, {"classifications", x.classifications}};
  }
  json current = json::object();
  for (const auto& [user, doc] : s.current_document) {
    current[user.str()] = doc;
  }
  json queries = json::object();
  for (const auto& [user, list] : s.recent_queries) {
    json entries = json::array();
    for (const auto& q : list) {
      entries.push_back({{"query", q.query}, {"source", q.source}, {"timestamp", q.timestamp}});
    }
    queries[user.str()] = std::move(entries);
  }
  json tally = json::object();
  for (const auto& [process, n] : s.process_tally) {
    tally[std::string(to_string(process))] = n;
  }
  return json{{"workspace", s.workspace},
              {"seq", s.seq},
              {"last_timestamp", s.last_timestamp},
              {"problems", std::move(problems)},
              {"roots", s.roots},
              {"annotations", std::move(annotations)},
              {"documents", std::move(documents)},
              {"reports", std::move(reports)},
              {"document_extras", std::move(extras)},
              {"participants", s.participants},
              {"current_document", std::move(current)},
              {"recent_queries", std::move(queries)},
              {"process_tally", std::move(tally)}};
}

WorkspaceState state_from_json(const json& j) {
  WorkspaceState s;
  j.at("workspace").get_to(s.workspace);
  j.at("seq").get_to(s.seq);
  j.at("last_timestamp").get_to(s.last_timestamp);
  for (const auto& [id, p] : j.at("problems").items()) {
    s.problems[ProblemId(id)] = p.get<ProblemDefinition>();
  }
  j.at("roots").get_to(s.roots);
  for (const auto& [id, a] : j.at("annotations").items()) {
    s.annotations[AnnotationId(id)] = a.get<AnnotationRecord>();
  }
  for (const auto& [id, d] : j.at("documents").items()) {
    auto doc = d.get<DocumentRecord>();
    s.document_by_url[doc.url] = doc.id;
    s.documents[DocumentId(id)] = std::move(doc);
  }
  for (const auto& r : j.at("reports")) {
    auto report = r.get<indicator::IndicatorReport>();
    s.reports[{report.document, report.problem}] = std::move(report);
  }
  for (const auto& [id, x] : j.at("document_extras").items()) {
    DocumentExtras extras;
    x.at("tags").get_to(extras.tags);
    x.at("metadata").get_to(extras.metadata);
    x.at("classifications").get_to(extras.classifications);
    s.document_extras[DocumentId(id)] = std::move(extras);
  }
  j.at("participants").get_to(s.participants);
  for (const auto& [user, doc] : j.at("current_document").items()) {
    s.current_document[UserId(user)] = doc.get<DocumentId>();
  }
  for (const auto& [user, entries] : j.at("recent_queries").items()) {
    auto& list = s.recent_queries[UserId(user)];
    for (const auto& q : entries) {
      list.push_back({q.at("query").get<std::string>(), q.at("source").get<std::string>(),
                      q.at("timestamp").get<Timestamp>()});
    }
  }
  for (const auto& [name, n] : j.at("process_tally").items()) {
    auto process = parse_knowledge_process(name);
    if (!process) {
      throw Error(ErrorCode::corrupt_log, "snapshot names unknown process " + name);
    }
    s.process_tally[*process] = n.get<std::uint64_t>();
  }
  return s;
}

}  // namespace meco::repository

#include "meco/service/api.hpp"

#include <algorithm>
#include <charconv>

#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"
#include "meco/indicator/analyzer.hpp"
#include "meco/knowledge/codec.hpp"
#include "meco/knowledge/operations.hpp"

namespace meco::service {

using nlohmann::json;
using repository::WorkspaceState;

namespace {

// Failures that never reach the domain layer: bad routes, bodies, headers.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, json{{"error", {{"code", code}, {"message", message}}}}};
}

[[noreturn]] void malformed(const std::string& message) { throw HttpError{400, "malformed_request", message}; }

json parse_body(const HttpRequest& request) {
  if (trim(request.body).empty()) {
    return json::object();
  }
  auto j = json::parse(request.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    malformed("body must be a JSON object");
  }
  return j;
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required_field(const json& j, const char* key) {
  auto v = optional_field<T>(j, key);
  if (!v) {
    malformed(std::string("missing field '") + key + "'");
  }
  return std::move(*v);
}

UserId require_user(const HttpRequest& request) {
  auto user = request.header(kUserHeader);
  auto id = user ? trim(*user) : std::string_view();
  if (id.empty()) {
    throw HttpError{401, "missing_user", std::string("the ") + std::string(kUserHeader) + " header is required"};
  }
  if (id.size() > 128 || std::any_of(id.begin(), id.end(), [](char c) { return static_cast<unsigned char>(c) < 0x20; })) {
    malformed("malformed user id");
  }
  return UserId(std::string(id));
}

std::size_t positive_param(const Target& target, const char* name, std::size_t fallback, std::size_t cap) {
  auto it = target.query.find(name);
  if (it == target.query.end() || it->second.empty()) {
    return fallback;
  }
  std::size_t n = 0;
  const auto& v = it->second;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || ptr != v.data() + v.size() || n == 0) {
    throw Error(ErrorCode::invalid_argument, std::string(name) + " must be a positive integer");
  }
  return std::min(n, cap);
}

json document_summary(const knowledge::DocumentRecord& d) {
  return {{"id", d.id}, {"url", d.url}, {"title", d.title}, {"first_viewer", d.first_viewer}, {"timestamp", d.timestamp}};
}

// Annotation maps are keyed by opaque id; present them in the order they were made.
std::vector<const knowledge::AnnotationRecord*> annotations_on(const WorkspaceState& s, knowledge::EntityRef::Type type,
                                                               const std::string& id) {
  std::vector<const knowledge::AnnotationRecord*> out;
  for (const auto& [_, a] : s.annotations) {
    if (a.target.type == type && a.target.id == id) {
      out.push_back(&a);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
  });
  return out;
}

json annotations_json(const std::vector<const knowledge::AnnotationRecord*>& list) {
  json out = json::array();
  for (const auto* a : list) {
    out.push_back(*a);
  }
  return out;
}

json report_json(const indicator::IndicatorReport& report, const knowledge::DocumentRecord& doc) {
  json j = report;
  j["url"] = doc.url;
  j["title"] = doc.title;
  return j;
}

// Awareness-sized event: document text is served by /documents/{id}.
json compact_event(const knowledge::ActivityEvent& event) {
  auto j = knowledge::event_to_json(event);
  if (event.kind() == knowledge::ActivityKind::document_opened) {
    j["payload"]["document"].erase("fetched_text");
  }
  return j;
}

json workspace_json(const WorkspaceState& s, const session::SessionEngine& sessions) {
  json problems = json::array();
  for (const auto& [_, p] : s.problems) {
    problems.push_back(p);
  }
  json annotations = json::array();
  for (const auto& [_, a] : s.annotations) {
    annotations.push_back(a);
  }
  std::sort(annotations.begin(), annotations.end(), [](const json& a, const json& b) {
    return std::tie(a["timestamp"].get_ref<const std::string&>(), a["id"].get_ref<const std::string&>()) <
           std::tie(b["timestamp"].get_ref<const std::string&>(), b["id"].get_ref<const std::string&>());
  });
  json documents = json::array();
  for (const auto& [_, d] : s.documents) {
    documents.push_back(document_summary(d));
  }
  json tally = json::object();
  for (auto process : knowledge::kAllKnowledgeProcesses) {
    auto it = s.process_tally.find(process);
    tally[std::string(knowledge::to_string(process))] = it == s.process_tally.end() ? 0 : it->second;
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
  json members = json::array();
  for (const auto& user : s.participants) {
    if (sessions.is_member(s.workspace, user)) {
      members.push_back(user);
    }
  }
  return {{"id", s.workspace},
          {"seq", s.seq},
          {"roots", s.roots},
          {"problems", std::move(problems)},
          {"annotations", std::move(annotations)},
          {"documents", std::move(documents)},
          {"participants", s.participants},
          {"members", std::move(members)},
          {"current_document", std::move(current)},
          {"recent_queries", std::move(queries)},
          {"process_tally", std::move(tally)}};
}

knowledge::ProblemDraft draft_from(const json& j) {
  knowledge::ProblemDraft d;
  d.statement = required_field<std::string>(j, "statement");
  d.objective = optional_field<std::string>(j, "objective").value_or("");
  d.domains = optional_field<std::set<std::string>>(j, "domains").value_or(std::set<std::string>{});
  d.keywords = optional_field<std::vector<std::string>>(j, "keywords").value_or(std::vector<std::string>{});
  d.sources = optional_field<std::vector<knowledge::InformationSource>>(j, "sources").value_or(
      std::vector<knowledge::InformationSource>{});
  d.indicators =
      optional_field<std::vector<knowledge::Indicator>>(j, "indicators").value_or(std::vector<knowledge::Indicator>{});
  d.extra_attributes = optional_field<std::map<std::string, std::string>>(j, "extra_attributes")
                           .value_or(std::map<std::string, std::string>{});
  return d;
}

}  // namespace

std::optional<std::string> HttpRequest::header(std::string_view name) const {
  for (const auto& [key, value] : headers) {
    if (ascii_lower(key) == ascii_lower(name)) {
      return value;
    }
  }
  return std::nullopt;
}

std::optional<std::string> url_decode(std::string_view text, bool query_component) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '%') {
      if (i + 2 >= text.size()) {
        return std::nullopt;
      }
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + i + 1, text.data() + i + 3, value, 16);
      if (ec != std::errc() || ptr != text.data() + i + 3) {
        return std::nullopt;
      }
      out += static_cast<char>(value);
      i += 2;
    } else if (c == '+' && query_component) {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<Target> parse_target(std::string_view target) {
  if (target.empty() || target.front() != '/') {
    return std::nullopt;
  }
  Target out;
  auto q = target.find('?');
  auto path = target.substr(0, q);
  std::size_t start = 1;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) {
      end = path.size();
    }
    if (end > start) {
      auto segment = url_decode(path.substr(start, end - start), false);
      if (!segment) {
        return std::nullopt;
      }
      out.segments.push_back(std::move(*segment));
    }
    start = end + 1;
  }
  if (q != std::string_view::npos) {
    auto query = target.substr(q + 1);
    while (!query.empty()) {
      auto amp = query.find('&');
      auto pair = query.substr(0, amp);
      query = amp == std::string_view::npos ? std::string_view() : query.substr(amp + 1);
      if (pair.empty()) {
        continue;
      }
      auto eq = pair.find('=');
      auto key = url_decode(pair.substr(0, eq), true);
      auto value = url_decode(eq == std::string_view::npos ? std::string_view() : pair.substr(eq + 1), true);
      if (!key || !value) {
        return std::nullopt;
      }
      out.query.emplace(std::move(*key), std::move(*value));
    }
  }
  return out;
}

int status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::unknown_parent:
    case ErrorCode::unknown_target:
    case ErrorCode::unknown_problem:
    case ErrorCode::unknown_document:
    case ErrorCode::unknown_workspace:
      return 404;
    case ErrorCode::already_exists:
    case ErrorCode::leader_has_no_document:
      return 409;
    case ErrorCode::not_a_member:
      return 403;
    case ErrorCode::storage_failure:
    case ErrorCode::corrupt_log:
      return 500;
    case ErrorCode::invalid_argument:
    case ErrorCode::empty_statement:
    case ErrorCode::empty_body:
    case ErrorCode::unknown_kind:
    case ErrorCode::kind_target_mismatch:
    case ErrorCode::invalid_event:
      return 400;
  }
  return 500;
}

Api::Api(repository::Repository& repo, session::SessionEngine& sessions, ApiOptions options)
    : repo_(repo), sessions_(sessions), options_(options) {}

HttpResponse Api::handle(const HttpRequest& request) {
  try {
    auto target = parse_target(request.target);
    if (!target) {
      malformed("malformed request target");
    }
    return route(request, *target);
  } catch (const HttpError& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "malformed_request", e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {} failed: {}", request.method, request.target, e.what());
    return error_response(500, "internal", "internal error");
  }
}

HttpResponse Api::route(const HttpRequest& request, const Target& target) {
  const auto& s = target.segments;
  const auto& m = request.method;
  auto only = [&](std::string_view method) {
    if (m != method) {
      throw HttpError{405, "method_not_allowed", m + " is not allowed here"};
    }
  };

  if (s.size() == 1 && s[0] == "healthz") {
    only("GET");
    return {200, {{"status", "ok"}, {"workspaces", repo_.workspace_ids().size()}}};
  }
  if (s.size() == 1 && s[0] == "workspaces") {
    only("POST");
    return create_workspace(request);
  }
  if (s.size() == 2 && s[0] == "workspaces") {
    only("GET");
    return get_workspace(WorkspaceId(s[1]));
  }
  if (s.size() == 3 && s[0] == "workspaces" && s[2] == "problems") {
    only("POST");
    return create_problem(request, WorkspaceId(s[1]));
  }
  if (s.size() == 3 && s[0] == "workspaces" && s[2] == "history") {
    only("GET");
    return history(request, WorkspaceId(s[1]));
  }
  if (s.size() == 2 && s[0] == "problems") {
    if (m == "PATCH") {
      return revise_problem(request, ProblemId(s[1]));
    }
    only("GET");
    return get_problem(ProblemId(s[1]));
  }
  if (s.size() == 3 && s[0] == "problems" && s[2] == "subproblems") {
    only("POST");
    return add_sub_problem(request, ProblemId(s[1]));
  }
  if (s.size() == 3 && s[0] == "problems" && s[2] == "reports") {
    only("GET");
    return reports(ProblemId(s[1]));
  }
  if (s.size() == 3 && s[0] == "problems" && s[2] == "collaborators") {
    only("GET");
    return collaborators(ProblemId(s[1]), target);
  }
  if (s.size() == 1 && s[0] == "annotations") {
    only("POST");
    return annotate(request);
  }
  if (s.size() == 1 && s[0] == "search") {
    only("GET");
    return search(target);
  }
  if (s.size() == 2 && s[0] == "documents") {
    only("GET");
    return get_document(DocumentId(s[1]));
  }
  if (s.size() == 3 && s[0] == "documents" &&
      (s[2] == "tags" || s[2] == "metadata" || s[2] == "classifications")) {
    only("POST");
    return document_extra(request, DocumentId(s[1]), s[2]);
  }
  if (s.size() == 2 && s[0] == "ws") {
    throw HttpError{426, "upgrade_required", "this endpoint speaks the real-time protocol over WebSocket"};
  }
  throw HttpError{404, "not_found", "no such endpoint"};
}

HttpResponse Api::create_workspace(const HttpRequest& request) {
  auto body = parse_body(request);
  auto id = optional_field<std::string>(body, "id").value_or(repo_.new_id("w"));
  auto& store = repo_.create_workspace(WorkspaceId(id));
  return {201, store.read([&](const WorkspaceState& s) { return workspace_json(s, sessions_); })};
}

HttpResponse Api::get_workspace(const WorkspaceId& ws) {
  return {200, repo_.workspace(ws).read([&](const WorkspaceState& s) { return workspace_json(s, sessions_); })};
}

HttpResponse Api::create_problem(const HttpRequest& request, const WorkspaceId& ws) {
  auto user = require_user(request);
  auto draft = draft_from(parse_body(request));
  repo_.workspace(ws);
  return {201, knowledge::create_problem(repo_, ws, user, std::move(draft))};
}

HttpResponse Api::get_problem(const ProblemId& id) {
  auto stored = repo_.problem(id);
  return {200, repo_.workspace(stored.workspace).read([&](const WorkspaceState& s) {
            json children = json::array();
            for (const auto& child : stored.problem.sub_problems) {
              if (const auto* p = s.find_problem(child)) {
                children.push_back(*p);
              }
            }
            return json{{"workspace", stored.workspace},
                        {"problem", stored.problem},
                        {"sub_problems", std::move(children)},
                        {"annotations", annotations_json(annotations_on(s, knowledge::EntityRef::Type::problem,
                                                                         id.str()))}};
          })};
}

HttpResponse Api::revise_problem(const HttpRequest& request, const ProblemId& id) {
  auto user = require_user(request);
  auto body = parse_body(request);
  knowledge::ProblemRevision r;
  r.statement = optional_field<std::string>(body, "statement");
  r.objective = optional_field<std::string>(body, "objective");
  r.domains = optional_field<std::set<std::string>>(body, "domains");
  r.keywords = optional_field<std::vector<std::string>>(body, "keywords");
  r.sources = optional_field<std::vector<knowledge::InformationSource>>(body, "sources");
  r.indicators = optional_field<std::vector<knowledge::Indicator>>(body, "indicators");
  r.extra_attributes = optional_field<std::map<std::string, std::string>>(body, "extra_attributes");
  return {200, knowledge::revise_problem(repo_, id, r, user)};
}

HttpResponse Api::add_sub_problem(const HttpRequest& request, const ProblemId& id) {
  auto user = require_user(request);
  auto statement = required_field<std::string>(parse_body(request), "statement");
  return {201, knowledge::add_sub_problem(repo_, id, std::move(statement), user)};
}

HttpResponse Api::annotate(const HttpRequest& request) {
  auto user = require_user(request);
  auto body = parse_body(request);
  auto target = required_field<knowledge::EntityRef>(body, "target");
  auto text = required_field<std::string>(body, "body");
  auto kind_name = optional_field<std::string>(body, "kind").value_or("clarification");
  auto kind = knowledge::parse_annotation_kind(kind_name);
  if (!kind) {
    throw Error(ErrorCode::unknown_kind, "unknown annotation kind '" + kind_name + "'");
  }
  return {201, knowledge::annotate(repo_, target, std::move(text), *kind, user)};
}

HttpResponse Api::reports(const ProblemId& id) {
  auto stored = repo_.problem(id);
  return {200, repo_.workspace(stored.workspace).read([&](const WorkspaceState& s) {
            const auto* problem = s.find_problem(id);
            json list = json::array();
            for (const auto& [doc_id, doc] : s.documents) {
              auto it = s.reports.find({doc_id, id});
              list.push_back(report_json(it != s.reports.end() ? it->second : indicator::analyze_document(doc, *problem),
                                         doc));
            }
            return json{{"problem", id}, {"workspace", stored.workspace}, {"reports", std::move(list)}};
          })};
}

HttpResponse Api::search(const Target& target) {
  auto q = target.query.count("q") ? target.query.at("q") : std::string();
  auto limit = positive_param(target, "limit", options_.default_search_limit, options_.max_search_limit);
  auto corpus = repo_.corpus();
  json results = json::array();
  for (const auto& hit : repository::search_repository(corpus, q, limit)) {
    const auto& id = hit.entry.problem.id;
    json documents = repo_.workspace(hit.entry.workspace).read([&](const WorkspaceState& s) {
      json docs = json::array();
      for (const auto& [key, report] : s.reports) {
        if (key.second == id) {
          if (const auto* d = s.find_document(key.first)) {
            auto summary = document_summary(*d);
            summary["coverage"] = report.coverage();
            docs.push_back(std::move(summary));
          }
        }
      }
      return docs;
    });
    results.push_back({{"workspace", hit.entry.workspace},
                       {"score", hit.score},
                       {"problem", hit.entry.problem},
                       {"documents", std::move(documents)}});
  }
  return {200, {{"query", q}, {"results", std::move(results)}}};
}

HttpResponse Api::collaborators(const ProblemId& id, const Target& target) {
  auto stored = repo_.problem(id);
  auto k = positive_param(target, "k", options_.default_collaborators, options_.max_search_limit);
  auto corpus = repo_.corpus();
  auto suggestions =
      repository::recommend_collaborators(corpus, stored.problem, stored.participants, k, options_.recommend,
                                          [&](const UserId& user) { return sessions_.is_online(user); });
  json list = json::array();
  for (const auto& s : suggestions) {
    list.push_back({{"user", s.user}, {"affinity", s.affinity}, {"online", s.online}});
  }
  return {200, {{"problem", id}, {"collaborators", std::move(list)}}};
}

HttpResponse Api::history(const HttpRequest& request, const WorkspaceId& ws) {
  auto user = require_user(request);
  auto view = knowledge::view_history(repo_, ws, user);
  json entries = json::array();
  for (const auto& e : view.entries) {
    entries.push_back(compact_event(e));
  }
  return {200, {{"workspace", ws}, {"entries", std::move(entries)}, {"logged", compact_event(view.logged)}}};
}

HttpResponse Api::get_document(const DocumentId& id) {
  auto ws = repo_.workspace_of(id);
  if (!ws) {
    throw Error(ErrorCode::unknown_document, "no document " + id.str());
  }
  return {200, repo_.workspace(*ws).read([&](const WorkspaceState& s) {
            const auto* doc = s.find_document(id);
            if (!doc) {
              throw Error(ErrorCode::unknown_document, "no document " + id.str());
            }
            json reports = json::array();
            for (const auto& [key, report] : s.reports) {
              if (key.first == id) {
                reports.push_back(report);
              }
            }
            repository::DocumentExtras extras;
            if (auto it = s.document_extras.find(id); it != s.document_extras.end()) {
              extras = it->second;
            }
            return json{{"workspace", *ws},
                        {"document", *doc},
                        {"tags", extras.tags},
                        {"metadata", extras.metadata},
                        {"classifications", extras.classifications},
                        {"reports", std::move(reports)},
                        {"annotations",
                         annotations_json(annotations_on(s, knowledge::EntityRef::Type::document, id.str()))}};
          })};
}

HttpResponse Api::document_extra(const HttpRequest& request, const DocumentId& id, std::string_view what) {
  auto user = require_user(request);
  auto body = parse_body(request);
  knowledge::ActivityEvent event;
  if (what == "tags") {
    event = knowledge::tag_document(repo_, id, required_field<std::string>(body, "tag"), user);
  } else if (what == "metadata") {
    event = knowledge::add_document_metadata(repo_, id, required_field<std::string>(body, "name"),
                                             required_field<std::string>(body, "value"), user);
  } else {
    event = knowledge::classify_document(repo_, id, required_field<std::string>(body, "category"), user);
  }
  return {201, {{"event", compact_event(event)}}};
}

}  // namespace meco::service

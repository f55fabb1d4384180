#include "meco/knowledge/codec.hpp"

#include "meco/core/error.hpp"

namespace nlohmann {

void adl_serializer<meco::Timestamp>::to_json(json& j, const meco::Timestamp& ts) { j = meco::format_timestamp(ts); }

void adl_serializer<meco::Timestamp>::from_json(const json& j, meco::Timestamp& ts) {
  auto parsed = meco::parse_timestamp(j.get<std::string>());
  if (!parsed) {
    throw json::other_error::create(501, "malformed timestamp: " + j.get<std::string>(), &j);
  }
  ts = *parsed;
}

}  // namespace nlohmann

namespace meco::knowledge {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const json& j, const std::string& what) {
  throw json::other_error::create(502, what, &j);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->get<T>();
}

}  // namespace

void to_json(json& j, const Indicator& v) { j = json{{"attribute", v.attribute}, {"value", v.value}}; }

void from_json(const json& j, Indicator& v) {
  j.at("attribute").get_to(v.attribute);
  j.at("value").get_to(v.value);
}

void to_json(json& j, const InformationSource& v) { j = json{{"name", v.name}, {"locator", v.locator}}; }

void from_json(const json& j, InformationSource& v) {
  j.at("name").get_to(v.name);
  j.at("locator").get_to(v.locator);
}

void to_json(json& j, const ProblemDefinition& v) {
  j = json{{"id", v.id},
           {"statement", v.statement},
           {"objective", v.objective},
           {"timestamp", v.timestamp},
           {"domains", v.domains},
           {"keywords", v.keywords},
           {"sources", v.sources},
           {"indicators", v.indicators},
           {"sub_problems", v.sub_problems},
           {"extra_attributes", v.extra_attributes}};
}

void from_json(const json& j, ProblemDefinition& v) {
  j.at("id").get_to(v.id);
  j.at("statement").get_to(v.statement);
  j.at("objective").get_to(v.objective);
  j.at("timestamp").get_to(v.timestamp);
  j.at("domains").get_to(v.domains);
  j.at("keywords").get_to(v.keywords);
  j.at("sources").get_to(v.sources);
  j.at("indicators").get_to(v.indicators);
  j.at("sub_problems").get_to(v.sub_problems);
  j.at("extra_attributes").get_to(v.extra_attributes);
}

void to_json(json& j, const EntityRef& v) { j = json{{"type", to_string(v.type)}, {"id", v.id}}; }

void from_json(const json& j, EntityRef& v) {
  auto type = j.at("type").get<std::string>();
  if (type == "problem") {
    v.type = EntityRef::Type::problem;
  } else if (type == "document") {
    v.type = EntityRef::Type::document;
  } else {
    bad_field(j, "unknown target type: " + type);
  }
  j.at("id").get_to(v.id);
}

void to_json(json& j, const AnnotationRecord& v) {
  j = json{{"id", v.id},     {"author", v.author},           {"target", v.target},
           {"body", v.body}, {"kind", to_string(v.kind)}, {"timestamp", v.timestamp}};
}

void from_json(const json& j, AnnotationRecord& v) {
  j.at("id").get_to(v.id);
  j.at("author").get_to(v.author);
  j.at("target").get_to(v.target);
  j.at("body").get_to(v.body);
  auto kind = parse_annotation_kind(j.at("kind").get<std::string>());
  if (!kind) {
    bad_field(j, "unknown annotation kind");
  }
  v.kind = *kind;
  j.at("timestamp").get_to(v.timestamp);
}

void to_json(json& j, const DocumentRecord& v) {
  j = json{{"id", v.id},
           {"url", v.url},
           {"title", v.title},
           {"fetched_text", v.fetched_text},
           {"first_viewer", v.first_viewer},
           {"timestamp", v.timestamp}};
}

void from_json(const json& j, DocumentRecord& v) {
  j.at("id").get_to(v.id);
  j.at("url").get_to(v.url);
  j.at("title").get_to(v.title);
  j.at("fetched_text").get_to(v.fetched_text);
  j.at("first_viewer").get_to(v.first_viewer);
  j.at("timestamp").get_to(v.timestamp);
}

namespace {

struct PayloadEncoder {
  json operator()(const ChatMessage& p) const { return {{"body", p.body}}; }
  json operator()(const ViewSync& p) const { return {{"leader", p.leader}, {"document", p.document}}; }
  json operator()(const ProblemEdit& p) const {
    return {{"op", p.op == ProblemEdit::Op::create ? "create" : "revise"}, {"problem", p.problem}};
  }
  json operator()(const AnnotationAdded& p) const {
    json j{{"annotation", p.annotation}};
    if (p.sub_problem) {
      j["sub_problem"] = *p.sub_problem;
    }
    return j;
  }
  json operator()(const QuerySubmitted& p) const { return {{"query", p.query}, {"source", p.source}}; }
  json operator()(const TagAdded& p) const { return {{"document", p.document}, {"tag", p.tag}}; }
  json operator()(const MetadataAdded& p) const {
    return {{"document", p.document}, {"name", p.name}, {"value", p.value}};
  }
  json operator()(const ClassificationAdded& p) const {
    return {{"document", p.document}, {"category", p.category}};
  }
  json operator()(const HistoryViewed& p) const { return {{"entries", p.entries}}; }
  json operator()(const DocumentOpened& p) const {
    json j{{"document", p.document}, {"created", p.created}};
    if (p.report) {
      j["report"] = *p.report;
    }
    if (p.fetch) {
      j["fetch"] = {{"status", fetch::to_string(p.fetch->status)}, {"http_code", p.fetch->http_code}};
    }
    return j;
  }
};

}  // namespace

json payload_to_json(const ActivityPayload& payload) { return std::visit(PayloadEncoder{}, payload); }

ActivityPayload payload_from_json(ActivityKind kind, const json& j) {
  if (!j.is_object()) {
    bad_field(j, "payload must be an object");
  }
  switch (kind) {
    case ActivityKind::chat_message:
      return ChatMessage{j.at("body").get<std::string>()};
    case ActivityKind::view_sync:
      return ViewSync{j.at("leader").get<UserId>(), j.at("document").get<DocumentId>()};
    case ActivityKind::problem_edit: {
      ProblemEdit p;
      auto op = j.at("op").get<std::string>();
      if (op == "create") {
        p.op = ProblemEdit::Op::create;
      } else if (op == "revise") {
        p.op = ProblemEdit::Op::revise;
      } else {
        bad_field(j, "unknown problem_edit op: " + op);
      }
      j.at("problem").get_to(p.problem);
      return p;
    }
    case ActivityKind::annotation_added:
      return AnnotationAdded{j.at("annotation").get<AnnotationRecord>(),
                             optional_field<ProblemDefinition>(j, "sub_problem")};
    case ActivityKind::query_submitted:
      return QuerySubmitted{j.at("query").get<std::string>(), j.at("source").get<std::string>()};
    case ActivityKind::tag_added:
      return TagAdded{j.at("document").get<DocumentId>(), j.at("tag").get<std::string>()};
    case ActivityKind::metadata_added:
      return MetadataAdded{j.at("document").get<DocumentId>(), j.at("name").get<std::string>(),
                           j.at("value").get<std::string>()};
    case ActivityKind::classification_added:
      return ClassificationAdded{j.at("document").get<DocumentId>(), j.at("category").get<std::string>()};
    case ActivityKind::history_viewed:
      return HistoryViewed{j.at("entries").get<std::uint64_t>()};
    case ActivityKind::document_opened: {
      DocumentOpened p;
      j.at("document").get_to(p.document);
      j.at("created").get_to(p.created);
      p.report = optional_field<indicator::IndicatorReport>(j, "report");
      if (auto it = j.find("fetch"); it != j.end() && !it->is_null()) {
        auto status = fetch::parse_fetch_status(it->at("status").get<std::string>());
        if (!status) {
          bad_field(j, "unknown fetch status");
        }
        p.fetch = FetchOutcome{*status, it->at("http_code").get<int>()};
      }
      return p;
    }
  }
  bad_field(j, "unhandled activity kind");
}

json event_to_json(const ActivityEvent& event) {
  return json{{"seq", event.seq},
              {"timestamp", event.timestamp},
              {"actor", event.actor},
              {"workspace", event.workspace},
              {"kind", to_string(event.kind())},
              {"process", to_string(event.process())},
              {"payload", payload_to_json(event.payload)}};
}

}  // namespace meco::knowledge

namespace meco::indicator {

using nlohmann::json;

void to_json(json& j, const IndicatorReport& v) {
  json counts = json::array();
  for (const auto& c : v.counts) {
    counts.push_back({{"attribute", c.indicator.attribute}, {"value", c.indicator.value}, {"count", c.count}});
  }
  j = json{{"document", v.document},
           {"problem", v.problem},
           {"counts", std::move(counts)},
           {"token_count", v.token_count},
           {"matched", v.matched()},
           {"coverage", v.coverage()}};
}

void from_json(const json& j, IndicatorReport& v) {
  j.at("document").get_to(v.document);
  j.at("problem").get_to(v.problem);
  j.at("token_count").get_to(v.token_count);
  v.counts.clear();
  for (const auto& c : j.at("counts")) {
    v.counts.push_back({{c.at("attribute").get<std::string>(), c.at("value").get<std::string>()},
                        c.at("count").get<std::uint64_t>()});
  }
}

}  // namespace meco::indicator

#include "meco/session/protocol.hpp"

#include "meco/knowledge/codec.hpp"

namespace meco::session {

using nlohmann::json;
using knowledge::ActivityKind;

std::string_view to_string(const UpdateKind& kind) noexcept {
  if (const auto* change = std::get_if<PresenceChange>(&kind)) {
    return *change == PresenceChange::joined ? "joined" : "left";
  }
  return knowledge::to_string(std::get<ActivityKind>(kind));
}

std::optional<UpdateKind> parse_update_kind(std::string_view name) noexcept {
  if (name == "joined") {
    return PresenceChange::joined;
  }
  if (name == "left") {
    return PresenceChange::left;
  }
  if (auto kind = knowledge::parse_activity_kind(name)) {
    return *kind;
  }
  return std::nullopt;
}

AwarenessUpdate update_from_event(const knowledge::ActivityEvent& event) {
  AwarenessUpdate update;
  update.seq = event.seq;
  update.kind = event.kind();
  update.actor = event.actor;
  update.timestamp = event.timestamp;
  update.payload = knowledge::payload_to_json(event.payload);
  if (event.kind() == ActivityKind::document_opened) {
    auto& doc = update.payload["document"];
    doc["text_bytes"] = doc["fetched_text"].get<std::string>().size();
    doc.erase("fetched_text");
  }
  return update;
}

namespace {

std::string line(const json& j) {
  auto s = j.dump(-1, ' ', false, json::error_handler_t::replace);
  s += '\n';
  return s;
}

json parse_line(std::string_view text) {
  if (!text.empty() && text.back() == '\n') {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.back() == '\r') {
    text.remove_suffix(1);
  }
  if (text.find('\n') != std::string_view::npos) {
    throw ProtocolError("message spans more than one line");
  }
  auto j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProtocolError("message is not a JSON object");
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ProtocolError(std::string("missing field: ") + key);
  }
  // get<unsigned>() would wrap a negative number.
  if constexpr (std::is_unsigned_v<T>) {
    if (!it->is_number_unsigned()) {
      throw ProtocolError(std::string("mistyped field: ") + key);
    }
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("mistyped field: ") + key);
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return field<T>(j, key);
}

json update_to_json(const AwarenessUpdate& u) {
  return json{{"type", "update"},     {"seq", u.seq},           {"kind", to_string(u.kind)},
              {"actor", u.actor},     {"timestamp", u.timestamp}, {"payload", u.payload}};
}

}  // namespace

json session_state_to_json(const SessionState& s) {
  json presence = json::object();
  for (const auto& [user, p] : s.presence) {
    presence[user.str()] = p == Presence::online ? "online" : "offline";
  }
  json current = json::object();
  for (const auto& [user, doc] : s.current_document) {
    current[user.str()] = doc ? json(doc->str()) : json(nullptr);
  }
  json queries = json::object();
  for (const auto& [user, list] : s.recent_queries) {
    json entries = json::array();
    for (const auto& q : list) {
      entries.push_back({{"query", q.query}, {"source", q.source}, {"timestamp", q.timestamp}});
    }
    queries[user.str()] = std::move(entries);
  }
  return json{{"workspace", s.workspace},
              {"members", s.members},
              {"presence", std::move(presence)},
              {"current_document", std::move(current)},
              {"recent_queries", std::move(queries)}};
}

SessionState session_state_from_json(const json& j) {
  try {
    SessionState s;
    j.at("workspace").get_to(s.workspace);
    j.at("members").get_to(s.members);
    for (const auto& [user, p] : j.at("presence").items()) {
      auto v = p.get<std::string>();
      if (v != "online" && v != "offline") {
        throw ProtocolError("bad presence value: " + v);
      }
      s.presence[UserId(user)] = v == "online" ? Presence::online : Presence::offline;
    }
    for (const auto& [user, doc] : j.at("current_document").items()) {
      s.current_document[UserId(user)] = doc.is_null() ? std::nullopt : std::optional(doc.get<DocumentId>());
    }
    for (const auto& [user, entries] : j.at("recent_queries").items()) {
      auto& list = s.recent_queries[UserId(user)];
      for (const auto& q : entries) {
        list.push_back({q.at("query").get<std::string>(), q.at("source").get<std::string>(),
                        q.at("timestamp").get<Timestamp>()});
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed state: ") + e.what());
  }
}

std::string encode(const ClientMessage& message) {
  json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, JoinRequest>) {
          json out{{"type", "join"}};
          if (m.since) out["since"] = *m.since;
          return out;
        } else if constexpr (std::is_same_v<T, QueryRequest>) {
          return {{"type", "query"}, {"query", m.query}, {"source", m.source}};
        } else if constexpr (std::is_same_v<T, OpenRequest>) {
          json out{{"type", "open"}, {"url", m.url}, {"title", m.title}};
          if (m.problem) out["problem"] = *m.problem;
          return out;
        } else if constexpr (std::is_same_v<T, SyncRequest>) {
          return {{"type", "sync"}, {"leader", m.leader}};
        } else if constexpr (std::is_same_v<T, ChatRequest>) {
          return {{"type", "chat"}, {"body", m.body}};
        } else if constexpr (std::is_same_v<T, LeaveRequest>) {
          return {{"type", "leave"}};
        } else {
          return {{"type", "heartbeat"}};
        }
      },
      message.body);
  if (message.ref) {
    j["ref"] = *message.ref;
  }
  return line(j);
}

ClientMessage decode_client(std::string_view text) {
  auto j = parse_line(text);
  auto type = field<std::string>(j, "type");
  ClientMessage m;
  m.ref = optional_field<std::string>(j, "ref");
  if (type == "join") {
    m.body = JoinRequest{optional_field<Seq>(j, "since")};
  } else if (type == "query") {
    m.body = QueryRequest{field<std::string>(j, "query"), optional_field<std::string>(j, "source").value_or("")};
  } else if (type == "open") {
    auto problem = optional_field<std::string>(j, "problem");
    m.body = OpenRequest{field<std::string>(j, "url"), optional_field<std::string>(j, "title").value_or(""),
                         problem ? std::optional(ProblemId(*problem)) : std::nullopt};
  } else if (type == "sync") {
    m.body = SyncRequest{UserId(field<std::string>(j, "leader"))};
  } else if (type == "chat") {
    m.body = ChatRequest{field<std::string>(j, "body")};
  } else if (type == "leave") {
    m.body = LeaveRequest{};
  } else if (type == "heartbeat") {
    m.body = HeartbeatRequest{};
  } else {
    throw ProtocolError("unknown message type: " + type);
  }
  return m;
}

std::string encode(const ServerMessage& message) {
  return line(std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StateMessage>) {
          return {{"type", "state"}, {"seq", m.seq}, {"state", session_state_to_json(m.state)}};
        } else if constexpr (std::is_same_v<T, UpdateMessage>) {
          return update_to_json(m.update);
        } else if constexpr (std::is_same_v<T, ErrorMessage>) {
          json out{{"type", "error"}, {"code", m.code}, {"message", m.message}};
          if (m.ref) out["ref"] = *m.ref;
          return out;
        } else {
          return {{"type", "heartbeat"}, {"seq", m.seq}};
        }
      },
      message));
}

ServerMessage decode_server(std::string_view text) {
  auto j = parse_line(text);
  auto type = field<std::string>(j, "type");
  if (type == "state") {
    auto it = j.find("state");
    if (it == j.end()) {
      throw ProtocolError("missing field: state");
    }
    return StateMessage{field<Seq>(j, "seq"), session_state_from_json(*it)};
  }
  if (type == "update") {
    AwarenessUpdate u;
    u.seq = field<Seq>(j, "seq");
    auto kind = parse_update_kind(field<std::string>(j, "kind"));
    if (!kind) {
      throw ProtocolError("unknown update kind");
    }
    u.kind = *kind;
    u.actor = UserId(field<std::string>(j, "actor"));
    auto ts = parse_timestamp(field<std::string>(j, "timestamp"));
    if (!ts) {
      throw ProtocolError("malformed timestamp");
    }
    u.timestamp = *ts;
    u.payload = field<json>(j, "payload");
    return UpdateMessage{std::move(u)};
  }
  if (type == "error") {
    return ErrorMessage{field<std::string>(j, "code"), field<std::string>(j, "message"),
                        optional_field<std::string>(j, "ref")};
  }
  if (type == "heartbeat") {
    return HeartbeatMessage{field<Seq>(j, "seq")};
  }
  throw ProtocolError("unknown message type: " + type);
}

}  // namespace meco::session

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "meco/knowledge/events.hpp"
#include "meco/repository/state.hpp"

// Real-time wire protocol: one JSON object per line, UTF-8, '\n'-terminated,
// discriminated by "type". The catalog is documented in docs/protocol.md.

namespace meco::session {

enum class Presence { online, offline };
enum class PresenceChange { joined, left };

using UpdateKind = std::variant<PresenceChange, knowledge::ActivityKind>;

std::string_view to_string(const UpdateKind& kind) noexcept;
std::optional<UpdateKind> parse_update_kind(std::string_view name) noexcept;

// What a member sees of one workspace change. Activity updates carry the seq
// of the event that caused them; presence changes carry the high-water seq at
// the time they happened and do not consume a sequence number.
struct AwarenessUpdate {
  Seq seq = 0;
  UpdateKind kind = PresenceChange::joined;
  UserId actor;
  Timestamp timestamp;
  nlohmann::json payload = nlohmann::json::object();

  bool is_activity() const noexcept { return std::holds_alternative<knowledge::ActivityKind>(kind); }

  friend bool operator==(const AwarenessUpdate&, const AwarenessUpdate&) = default;
};

// Awareness form of an event. Document text is left out of document_opened
// payloads; members fetch it over HTTP when they need it.
AwarenessUpdate update_from_event(const knowledge::ActivityEvent& event);

struct SessionState {
  WorkspaceId workspace;
  std::set<UserId> members;
  std::map<UserId, Presence> presence;
  std::map<UserId, std::optional<DocumentId>> current_document;
  std::map<UserId, std::vector<repository::QueryEntry>> recent_queries;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Client -> server.
struct JoinRequest {
  // Replay activity updates after this seq (resume after a reconnect).
  std::optional<Seq> since;
  friend bool operator==(const JoinRequest&, const JoinRequest&) = default;
};
struct QueryRequest {
  std::string query;
  std::string source;
  friend bool operator==(const QueryRequest&, const QueryRequest&) = default;
};
struct OpenRequest {
  std::string url;
  std::string title;
  std::optional<ProblemId> problem;
  friend bool operator==(const OpenRequest&, const OpenRequest&) = default;
};
struct SyncRequest {
  UserId leader;
  friend bool operator==(const SyncRequest&, const SyncRequest&) = default;
};
struct ChatRequest {
  std::string body;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};
struct LeaveRequest {
  friend bool operator==(const LeaveRequest&, const LeaveRequest&) = default;
};
struct HeartbeatRequest {
  friend bool operator==(const HeartbeatRequest&, const HeartbeatRequest&) = default;
};

using ClientBody =
    std::variant<JoinRequest, QueryRequest, OpenRequest, SyncRequest, ChatRequest, LeaveRequest, HeartbeatRequest>;

struct ClientMessage {
  ClientBody body;
  // Opaque correlation tag echoed in any error this message causes.
  std::optional<std::string> ref;
  friend bool operator==(const ClientMessage&, const ClientMessage&) = default;
};

// Server -> client.
struct StateMessage {
  Seq seq = 0;
  SessionState state;
  friend bool operator==(const StateMessage&, const StateMessage&) = default;
};
struct UpdateMessage {
  AwarenessUpdate update;
  friend bool operator==(const UpdateMessage&, const UpdateMessage&) = default;
};
struct ErrorMessage {
  std::string code;
  std::string message;
  std::optional<std::string> ref;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};
struct HeartbeatMessage {
  Seq seq = 0;
  friend bool operator==(const HeartbeatMessage&, const HeartbeatMessage&) = default;
};

using ServerMessage = std::variant<StateMessage, UpdateMessage, ErrorMessage, HeartbeatMessage>;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Encoders return one line including the trailing '\n'. Decoders accept a
// line with or without it and throw ProtocolError on anything off-catalog.
std::string encode(const ClientMessage& message);
std::string encode(const ServerMessage& message);
ClientMessage decode_client(std::string_view line);
ServerMessage decode_server(std::string_view line);

nlohmann::json session_state_to_json(const SessionState& state);
SessionState session_state_from_json(const nlohmann::json& j);

}  // namespace meco::session

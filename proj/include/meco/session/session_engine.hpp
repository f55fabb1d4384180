#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "meco/fetch/fetcher.hpp"
#include "meco/repository/repository.hpp"
#include "meco/session/protocol.hpp"

namespace meco::session {

// One live connection. Both calls happen with workspace locks held, so they
// must only enqueue. deliver() returning false marks a consumer that cannot
// keep up; the engine drops it rather than wait.
class Subscriber {
 public:
  virtual ~Subscriber() = default;
  virtual bool deliver(const ServerMessage& message) = 0;
  virtual void close(std::string_view reason) = 0;
};

struct SessionOptions {
  std::chrono::milliseconds heartbeat_timeout{30000};
};

struct JoinResult {
  Seq seq = 0;
  SessionState state;
  // Activity updates after the requested `since`, already delivered.
  std::size_t replayed = 0;
};

struct OpenResult {
  knowledge::ActivityEvent event;
  knowledge::DocumentRecord document;
  std::optional<indicator::IndicatorReport> report;
  // Absent when the URL was already recorded and nothing was fetched.
  std::optional<knowledge::FetchOutcome> fetch;
};

// Live membership and awareness for every workspace. Updates are pushed from
// the repository's commit path, so each member sees them in seq order and
// only after the event is durable.
class SessionEngine {
 public:
  SessionEngine(repository::Repository& repo, fetch::DocumentSource& source, SessionOptions options = {});
  ~SessionEngine();

  SessionEngine(const SessionEngine&) = delete;
  SessionEngine& operator=(const SessionEngine&) = delete;

  // Creates the workspace on first join. The subscriber first receives a
  // state message, then activity updates after `since` when given, then live
  // updates. Joining again while connected replaces the old connection.
  JoinResult join(const WorkspaceId& ws, const UserId& user, std::shared_ptr<Subscriber> subscriber,
                  std::optional<Seq> since = std::nullopt);

  knowledge::ActivityEvent submit_query(const WorkspaceId& ws, const UserId& user, const std::string& query,
                                        const std::string& source);
  // Fetches outside any lock; a URL already recorded in the workspace is reused
  // without fetching. The report is computed against `problem`, or the
  // workspace's active problem when none is given.
  OpenResult open_document(const WorkspaceId& ws, const UserId& user, const std::string& url,
                           const std::string& title, std::optional<ProblemId> problem = std::nullopt);
  DocumentId view_sync(const WorkspaceId& ws, const UserId& follower, const UserId& leader);
  knowledge::ActivityEvent send_message(const WorkspaceId& ws, const UserId& user, const std::string& body);
  void leave(const WorkspaceId& ws, const UserId& user);

  // Transport went away. Only removes the member if `subscriber` is still its
  // connection; a no-op otherwise.
  void disconnect(const WorkspaceId& ws, const UserId& user, const Subscriber* subscriber);
  // Marks the member alive and returns the workspace high-water seq.
  Seq heartbeat(const WorkspaceId& ws, const UserId& user);
  // Drops members silent for longer than the heartbeat timeout.
  std::size_t reap_idle();

  // Routes one decoded client message. Failures go back to the subscriber as
  // error messages instead of being thrown.
  void dispatch(const WorkspaceId& ws, const UserId& user, const std::shared_ptr<Subscriber>& subscriber,
                const ClientMessage& message);

  SessionState state(const WorkspaceId& ws) const;
  bool is_member(const WorkspaceId& ws, const UserId& user) const;
  bool is_online(const UserId& user) const;

  const SessionOptions& options() const noexcept { return options_; }

 private:
  struct Member {
    std::shared_ptr<Subscriber> subscriber;
    Timestamp last_seen;
  };
  struct Room {
    std::map<UserId, Member> members;
    // Users who joined at some point, including ones who never acted.
    std::set<UserId> seen;
  };

  void on_event(const knowledge::ActivityEvent& event, const repository::WorkspaceState& state);
  // Callers hold the workspace writer lock and rooms_mu_, in that order.
  void broadcast_locked(const WorkspaceId& ws, Room& room, const ServerMessage& message, Seq high_water);
  void remove_locked(const WorkspaceId& ws, Room& room, const UserId& user, Seq high_water, std::string_view reason);
  void require_member_locked(const WorkspaceId& ws, const UserId& user) const;
  SessionState state_locked(const WorkspaceId& ws, const repository::WorkspaceState& state) const;

  repository::Repository& repo_;
  fetch::DocumentSource& source_;
  SessionOptions options_;

  mutable std::mutex rooms_mu_;
  std::map<WorkspaceId, Room> rooms_;
  std::map<UserId, std::size_t> online_;
  std::size_t listener_token_ = 0;
};

}  // namespace meco::session

#include "meco/session/session_engine.hpp"

#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"
#include "meco/indicator/analyzer.hpp"

namespace meco::session {

using knowledge::ActivityEvent;
using knowledge::ActivityPayload;
using repository::WorkspaceState;

namespace {

ServerMessage presence_update(PresenceChange change, const UserId& user, Seq high_water, Timestamp now) {
  AwarenessUpdate update;
  update.seq = high_water;
  update.kind = change;
  update.actor = user;
  update.timestamp = now;
  return UpdateMessage{std::move(update)};
}

}  // namespace

SessionEngine::SessionEngine(repository::Repository& repo, fetch::DocumentSource& source, SessionOptions options)
    : repo_(repo), source_(source), options_(options) {
  listener_token_ =
      repo_.add_listener([this](const ActivityEvent& event, const WorkspaceState& state) { on_event(event, state); });
}

SessionEngine::~SessionEngine() {
  repo_.remove_listener(listener_token_);
  std::lock_guard lock(rooms_mu_);
  for (auto& [_, room] : rooms_) {
    for (auto& [_, member] : room.members) {
      member.subscriber->close("shutting down");
    }
  }
}

void SessionEngine::on_event(const ActivityEvent& event, const WorkspaceState&) {
  std::lock_guard lock(rooms_mu_);
  auto it = rooms_.find(event.workspace);
  if (it == rooms_.end() || it->second.members.empty()) {
    return;
  }
  if (auto member = it->second.members.find(event.actor); member != it->second.members.end()) {
    member->second.last_seen = repo_.now();
  }
  broadcast_locked(event.workspace, it->second, UpdateMessage{update_from_event(event)}, event.seq);
}

void SessionEngine::broadcast_locked(const WorkspaceId& ws, Room& room, const ServerMessage& message,
                                     Seq high_water) {
  std::vector<UserId> dropped;
  for (auto& [user, member] : room.members) {
    if (!member.subscriber->deliver(message)) {
      dropped.push_back(user);
    }
  }
  for (const auto& user : dropped) {
    spdlog::warn("dropping slow consumer {} from {}", user.str(), ws.str());
    remove_locked(ws, room, user, high_water, "slow consumer");
  }
}

void SessionEngine::remove_locked(const WorkspaceId& ws, Room& room, const UserId& user, Seq high_water,
                                  std::string_view reason) {
  auto it = room.members.find(user);
  if (it == room.members.end()) {
    return;
  }
  auto subscriber = std::move(it->second.subscriber);
  room.members.erase(it);
  if (auto online = online_.find(user); online != online_.end() && --online->second == 0) {
    online_.erase(online);
  }
  subscriber->close(reason);
  broadcast_locked(ws, room, presence_update(PresenceChange::left, user, high_water, repo_.now()), high_water);
}

void SessionEngine::require_member_locked(const WorkspaceId& ws, const UserId& user) const {
  auto it = rooms_.find(ws);
  if (it == rooms_.end() || !it->second.members.contains(user)) {
    throw Error(ErrorCode::not_a_member, user.str() + " is not connected to " + ws.str());
  }
}

SessionState SessionEngine::state_locked(const WorkspaceId& ws, const WorkspaceState& state) const {
  SessionState out;
  out.workspace = ws;
  std::set<UserId> known = state.participants;
  if (auto it = rooms_.find(ws); it != rooms_.end()) {
    for (const auto& [user, _] : it->second.members) {
      out.members.insert(user);
    }
    known.insert(it->second.seen.begin(), it->second.seen.end());
  }
  for (const auto& user : known) {
    out.presence[user] = out.members.contains(user) ? Presence::online : Presence::offline;
    auto doc = state.current_document.find(user);
    out.current_document[user] = doc == state.current_document.end() ? std::nullopt : std::optional(doc->second);
  }
  for (const auto& [user, queries] : state.recent_queries) {
    out.recent_queries[user].assign(queries.begin(), queries.end());
  }
  return out;
}

JoinResult SessionEngine::join(const WorkspaceId& ws, const UserId& user, std::shared_ptr<Subscriber> subscriber,
                               std::optional<Seq> since) {
  if (user.empty()) {
    throw Error(ErrorCode::invalid_argument, "user id is empty");
  }
  auto& store = repo_.ensure_workspace(ws);
  return store.exclusive([&](const WorkspaceState& state) {
    if (since && *since > state.seq) {
      throw Error(ErrorCode::invalid_argument, "since is beyond the workspace high-water mark");
    }
    auto backlog = since ? store.events_since_locked(*since) : std::vector<ActivityEvent>{};

    std::lock_guard lock(rooms_mu_);
    auto& room = rooms_[ws];
    auto [it, fresh] = room.members.try_emplace(user);
    if (!fresh) {
      it->second.subscriber->close("replaced by a new connection");
    } else {
      ++online_[user];
    }
    it->second.subscriber = subscriber;
    it->second.last_seen = repo_.now();
    room.seen.insert(user);

    JoinResult result;
    result.seq = state.seq;
    result.state = state_locked(ws, state);
    result.replayed = backlog.size();

    bool ok = subscriber->deliver(StateMessage{result.seq, result.state});
    for (const auto& event : backlog) {
      ok = ok && subscriber->deliver(UpdateMessage{update_from_event(event)});
    }
    if (!ok) {
      room.members.erase(user);
      if (--online_[user] == 0) {
        online_.erase(user);
      }
      subscriber->close("slow consumer");
      if (!fresh) {
        broadcast_locked(ws, room, presence_update(PresenceChange::left, user, state.seq, repo_.now()), state.seq);
      }
      return result;
    }
    if (fresh) {
      auto joined = presence_update(PresenceChange::joined, user, state.seq, repo_.now());
      std::vector<UserId> dropped;
      for (auto& [other, member] : room.members) {
        if (other != user && !member.subscriber->deliver(joined)) {
          dropped.push_back(other);
        }
      }
      for (const auto& other : dropped) {
        remove_locked(ws, room, other, state.seq, "slow consumer");
      }
    }
    return result;
  });
}

ActivityEvent SessionEngine::submit_query(const WorkspaceId& ws, const UserId& user, const std::string& query,
                                          const std::string& source) {
  return repo_.commit(ws, user, [&](const WorkspaceState&, Timestamp) -> ActivityPayload {
    {
      std::lock_guard lock(rooms_mu_);
      require_member_locked(ws, user);
    }
    if (trim(query).empty()) {
      throw Error(ErrorCode::invalid_argument, "query is empty");
    }
    return knowledge::QuerySubmitted{query, source};
  });
}

OpenResult SessionEngine::open_document(const WorkspaceId& ws, const UserId& user, const std::string& url,
                                        const std::string& title, std::optional<ProblemId> problem) {
  {
    std::lock_guard lock(rooms_mu_);
    require_member_locked(ws, user);
  }
  if (!is_absolute_url(url) || !(url.starts_with("http://") || url.starts_with("https://"))) {
    throw Error(ErrorCode::invalid_argument, "not an absolute http(s) url: " + url);
  }
  auto& store = repo_.workspace(ws);
  bool known = store.read([&](const WorkspaceState& s) { return s.find_document_by_url(url) != nullptr; });
  std::optional<fetch::FetchResult> fetched;
  if (!known) {
    fetched = source_.fetch(url, source_.default_timeout());
  }

  knowledge::DocumentOpened opened;
  auto event = store.commit(user, [&](const WorkspaceState& s, Timestamp now) -> ActivityPayload {
    {
      std::lock_guard lock(rooms_mu_);
      require_member_locked(ws, user);
    }
    opened = {};
    if (const auto* existing = s.find_document_by_url(url)) {
      opened.document = *existing;
    } else if (fetched) {
      auto& doc = opened.document;
      doc.id = DocumentId(repo_.new_id("d"));
      doc.url = url;
      bool ok = fetched->status == fetch::FetchStatus::ok;
      doc.title = !trim(title).empty() ? title : (ok ? fetched->title : std::string());
      doc.fetched_text = ok ? fetched->text : std::string();
      doc.first_viewer = user;
      doc.timestamp = now;
      opened.created = true;
      opened.fetch = knowledge::FetchOutcome{fetched->status, fetched->http_code};
    } else {
      // Recorded when we looked, gone now: cannot happen, documents are never removed.
      throw Error(ErrorCode::unknown_document, "document for " + url + " vanished");
    }
    auto target = problem ? problem : s.active_problem();
    if (target) {
      const auto* p = s.find_problem(*target);
      if (!p) {
        throw Error(ErrorCode::unknown_problem, "no problem " + target->str() + " in " + ws.str());
      }
      opened.report = indicator::analyze_document(opened.document, *p);
    }
    return opened;
  });
  return OpenResult{std::move(event), opened.document, opened.report, opened.fetch};
}

DocumentId SessionEngine::view_sync(const WorkspaceId& ws, const UserId& follower, const UserId& leader) {
  DocumentId document;
  repo_.commit(ws, follower, [&](const WorkspaceState& s, Timestamp) -> ActivityPayload {
    {
      std::lock_guard lock(rooms_mu_);
      require_member_locked(ws, follower);
      require_member_locked(ws, leader);
    }
    auto it = s.current_document.find(leader);
    if (it == s.current_document.end()) {
      throw Error(ErrorCode::leader_has_no_document, leader.str() + " has no current document");
    }
    document = it->second;
    return knowledge::ViewSync{leader, document};
  });
  return document;
}

ActivityEvent SessionEngine::send_message(const WorkspaceId& ws, const UserId& user, const std::string& body) {
  return repo_.commit(ws, user, [&](const WorkspaceState&, Timestamp) -> ActivityPayload {
    {
      std::lock_guard lock(rooms_mu_);
      require_member_locked(ws, user);
    }
    if (trim(body).empty()) {
      throw Error(ErrorCode::empty_body, "message body is empty");
    }
    return knowledge::ChatMessage{body};
  });
}

void SessionEngine::leave(const WorkspaceId& ws, const UserId& user) {
  auto* store = repo_.find_workspace(ws);
  if (!store) {
    throw Error(ErrorCode::not_a_member, user.str() + " is not connected to " + ws.str());
  }
  store->exclusive([&](const WorkspaceState& state) {
    std::lock_guard lock(rooms_mu_);
    require_member_locked(ws, user);
    remove_locked(ws, rooms_.at(ws), user, state.seq, "left");
  });
}

void SessionEngine::disconnect(const WorkspaceId& ws, const UserId& user, const Subscriber* subscriber) {
  auto* store = repo_.find_workspace(ws);
  if (!store) {
    return;
  }
  store->exclusive([&](const WorkspaceState& state) {
    std::lock_guard lock(rooms_mu_);
    auto room = rooms_.find(ws);
    if (room == rooms_.end()) {
      return;
    }
    auto it = room->second.members.find(user);
    if (it != room->second.members.end() && it->second.subscriber.get() == subscriber) {
      remove_locked(ws, room->second, user, state.seq, "disconnected");
    }
  });
}

Seq SessionEngine::heartbeat(const WorkspaceId& ws, const UserId& user) {
  auto* store = repo_.find_workspace(ws);
  auto high_water = store ? store->high_water() : 0;
  std::lock_guard lock(rooms_mu_);
  require_member_locked(ws, user);
  rooms_.at(ws).members.at(user).last_seen = repo_.now();
  return high_water;
}

std::size_t SessionEngine::reap_idle() {
  std::vector<WorkspaceId> occupied;
  {
    std::lock_guard lock(rooms_mu_);
    for (const auto& [ws, room] : rooms_) {
      if (!room.members.empty()) {
        occupied.push_back(ws);
      }
    }
  }
  std::size_t reaped = 0;
  for (const auto& ws : occupied) {
    auto* store = repo_.find_workspace(ws);
    if (!store) {
      continue;
    }
    store->exclusive([&](const WorkspaceState& state) {
      std::lock_guard lock(rooms_mu_);
      auto& room = rooms_.at(ws);
      auto now = repo_.now();
      std::vector<UserId> idle;
      for (const auto& [user, member] : room.members) {
        if (now - member.last_seen > options_.heartbeat_timeout) {
          idle.push_back(user);
        }
      }
      for (const auto& user : idle) {
        spdlog::info("{} timed out in {}", user.str(), ws.str());
        remove_locked(ws, room, user, state.seq, "heartbeat timeout");
      }
      reaped += idle.size();
    });
  }
  return reaped;
}

void SessionEngine::dispatch(const WorkspaceId& ws, const UserId& user, const std::shared_ptr<Subscriber>& subscriber,
                             const ClientMessage& message) {
  {
    // Any traffic from a connected member counts as a sign of life.
    std::lock_guard lock(rooms_mu_);
    if (auto room = rooms_.find(ws); room != rooms_.end()) {
      if (auto member = room->second.members.find(user);
          member != room->second.members.end() && member->second.subscriber == subscriber) {
        member->second.last_seen = repo_.now();
      }
    }
  }
  try {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, JoinRequest>) {
            join(ws, user, subscriber, m.since);
          } else if constexpr (std::is_same_v<T, HeartbeatRequest>) {
            auto seq = heartbeat(ws, user);
            if (!subscriber->deliver(HeartbeatMessage{seq})) {
              disconnect(ws, user, subscriber.get());
            }
          } else if constexpr (std::is_same_v<T, LeaveRequest>) {
            leave(ws, user);
          } else if constexpr (std::is_same_v<T, QueryRequest>) {
            submit_query(ws, user, m.query, m.source);
          } else if constexpr (std::is_same_v<T, OpenRequest>) {
            open_document(ws, user, m.url, m.title, m.problem);
          } else if constexpr (std::is_same_v<T, SyncRequest>) {
            view_sync(ws, user, m.leader);
          } else {
            static_assert(std::is_same_v<T, ChatRequest>);
            send_message(ws, user, m.body);
          }
        },
        message.body);
  } catch (const Error& e) {
    subscriber->deliver(ErrorMessage{std::string(to_string(e.code())), e.what(), message.ref});
  } catch (const std::exception& e) {
    spdlog::error("session message from {} in {} failed: {}", user.str(), ws.str(), e.what());
    subscriber->deliver(ErrorMessage{"internal", "internal error", message.ref});
  }
}

SessionState SessionEngine::state(const WorkspaceId& ws) const {
  const auto* store = repo_.find_workspace(ws);
  if (!store) {
    throw Error(ErrorCode::unknown_workspace, "no workspace " + ws.str());
  }
  return store->read([&](const WorkspaceState& s) {
    std::lock_guard lock(rooms_mu_);
    return state_locked(ws, s);
  });
}

bool SessionEngine::is_member(const WorkspaceId& ws, const UserId& user) const {
  std::lock_guard lock(rooms_mu_);
  auto it = rooms_.find(ws);
  return it != rooms_.end() && it->second.members.contains(user);
}

bool SessionEngine::is_online(const UserId& user) const {
  std::lock_guard lock(rooms_mu_);
  return online_.contains(user);
}

}  // namespace meco::session

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "meco/repository/event_log.hpp"
#include "meco/repository/state.hpp"

namespace meco::repository {

struct StoreOptions {
  SyncMode sync = SyncMode::fsync;
  // Rewrite the snapshot file every N events; 0 disables periodic writes.
  std::size_t snapshot_every = 100;
  FoldOptions fold;
};

inline constexpr const char* kEventLogFile = "events.log";
inline constexpr const char* kSnapshotFile = "snapshot";

// The single writer of one workspace. Mutations are serialized by an
// exclusive lock; readers share a lock and always see a whole-event prefix.
class WorkspaceStore {
 public:
  // Called under the writer lock after each event is durable and folded.
  using Listener = std::function<void(const knowledge::ActivityEvent&, const WorkspaceState&)>;
  // Produces the payload of the next event from the current state. `now` is
  // the event's timestamp. Throwing aborts the commit with nothing written.
  using Builder = std::function<knowledge::ActivityPayload(const WorkspaceState&, Timestamp now)>;

  // Opens or creates the workspace directory and replays its log. A trailing
  // record without its terminator was never acknowledged; it is cut off when
  // `repair_torn_tail` is set, otherwise opening fails with corrupt_log, as it
  // does for any other malformed record.
  static std::unique_ptr<WorkspaceStore> open(const WorkspaceId& id, const std::filesystem::path& dir,
                                              const StoreOptions& options, Clock clock,
                                              const LogWriterFactory& writers, bool repair_torn_tail);

  ~WorkspaceStore();

  const WorkspaceId& id() const noexcept { return id_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  knowledge::ActivityEvent commit(const UserId& actor, const Builder& build);
  knowledge::ActivityEvent append(const UserId& actor, knowledge::ActivityPayload payload);

  template <typename F>
  decltype(auto) read(F&& f) const {
    std::shared_lock lock(mu_);
    return std::forward<F>(f)(state_);
  }

  // Runs f while holding the writer lock, so no event can be sequenced
  // concurrently. Used to register live subscribers at an exact seq.
  template <typename F>
  decltype(auto) exclusive(F&& f) {
    std::unique_lock lock(mu_);
    return std::forward<F>(f)(static_cast<const WorkspaceState&>(state_));
  }

  Seq high_water() const;
  WorkspaceState state() const;
  std::vector<knowledge::ActivityEvent> events_since(Seq after) const;
  // Must be called with the writer lock held, i.e. inside exclusive().
  std::vector<knowledge::ActivityEvent> events_since_locked(Seq after) const;

  void set_listener(Listener listener);

  // Atomically replaces the snapshot file. Failures are logged, not thrown.
  void write_snapshot() const;

 private:
  WorkspaceStore(WorkspaceId id, std::filesystem::path dir, StoreOptions options, Clock clock);

  void write_snapshot_locked() const;

  WorkspaceId id_;
  std::filesystem::path dir_;
  StoreOptions options_;
  Clock clock_;
  std::unique_ptr<LogWriter> writer_;
  Listener listener_;

  mutable std::shared_mutex mu_;
  mutable std::mutex snapshot_mu_;
  WorkspaceState state_;
  std::vector<knowledge::ActivityEvent> events_;
};

}  // namespace meco::repository

#include "meco/repository/workspace_store.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"

namespace meco::repository {

namespace fs = std::filesystem;
using knowledge::ActivityEvent;
using knowledge::ActivityPayload;

WorkspaceStore::WorkspaceStore(WorkspaceId id, fs::path dir, StoreOptions options, Clock clock)
    : id_(std::move(id)), dir_(std::move(dir)), options_(options), clock_(std::move(clock)) {
  state_.workspace = id_;
}

WorkspaceStore::~WorkspaceStore() = default;

std::unique_ptr<WorkspaceStore> WorkspaceStore::open(const WorkspaceId& id, const fs::path& dir,
                                                     const StoreOptions& options, Clock clock,
                                                     const LogWriterFactory& writers, bool repair_torn_tail) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::storage_failure, "cannot create " + dir.string() + ": " + ec.message());
  }
  std::unique_ptr<WorkspaceStore> store(new WorkspaceStore(id, dir, options, std::move(clock)));
  auto log_path = dir / kEventLogFile;
  auto read = read_event_log(log_path, id);
  if (read.corruption) {
    const auto& c = *read.corruption;
    bool torn_tail = c.reason.starts_with("truncated record") && c.offset == read.valid_bytes;
    if (!(torn_tail && repair_torn_tail)) {
      throw Error(ErrorCode::corrupt_log, "workspace " + id.str() + ": corrupt log at offset " +
                                              std::to_string(c.offset) + " (line " + std::to_string(c.line) +
                                              "): " + c.reason);
    }
    spdlog::warn("workspace {}: dropping unacknowledged partial record at offset {}", id.str(), c.offset);
    fs::resize_file(log_path, read.valid_bytes, ec);
    if (ec) {
      throw Error(ErrorCode::storage_failure, "cannot truncate " + log_path.string() + ": " + ec.message());
    }
  }
  for (const auto& event : read.events) {
    try {
      check_event(store->state_, event);
    } catch (const Error& e) {
      throw Error(ErrorCode::corrupt_log,
                  "workspace " + id.str() + ": event " + std::to_string(event.seq) + " does not replay: " + e.what());
    }
    apply_event(store->state_, event, options.fold);
  }
  store->events_ = std::move(read.events);
  store->writer_ = writers(log_path, options.sync);
  return store;
}

ActivityEvent WorkspaceStore::commit(const UserId& actor, const Builder& build) {
  std::unique_lock lock(mu_);
  Timestamp now = std::max(clock_(), state_.last_timestamp);
  ActivityEvent event{state_.seq + 1, actor, id_, now, build(state_, now)};
  check_event(state_, event);
  writer_->append(encode_event_line(event));
  apply_event(state_, event, options_.fold);
  events_.push_back(event);
  if (options_.snapshot_every > 0 && event.seq % options_.snapshot_every == 0) {
    write_snapshot_locked();
  }
  if (listener_) {
    try {
      listener_(event, state_);
    } catch (const std::exception& e) {
      spdlog::error("workspace {}: event listener failed: {}", id_.str(), e.what());
    }
  }
  return event;
}

ActivityEvent WorkspaceStore::append(const UserId& actor, ActivityPayload payload) {
  return commit(actor, [&payload](const WorkspaceState&, Timestamp) { return std::move(payload); });
}

Seq WorkspaceStore::high_water() const {
  std::shared_lock lock(mu_);
  return state_.seq;
}

WorkspaceState WorkspaceStore::state() const {
  std::shared_lock lock(mu_);
  return state_;
}

std::vector<ActivityEvent> WorkspaceStore::events_since(Seq after) const {
  std::shared_lock lock(mu_);
  return events_since_locked(after);
}

std::vector<ActivityEvent> WorkspaceStore::events_since_locked(Seq after) const {
  if (after >= events_.size()) {
    return {};
  }
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

void WorkspaceStore::set_listener(Listener listener) {
  std::unique_lock lock(mu_);
  listener_ = std::move(listener);
}

void WorkspaceStore::write_snapshot() const {
  std::shared_lock lock(mu_);
  write_snapshot_locked();
}

void WorkspaceStore::write_snapshot_locked() const {
  auto target = dir_ / kSnapshotFile;
  auto tmp = dir_ / (std::string(kSnapshotFile) + ".tmp");
  std::lock_guard guard(snapshot_mu_);
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      auto j = state_to_json(state_);
      // Replaying tools need the fold parameter to reproduce the state.
      j["query_capacity"] = options_.fold.query_capacity;
      out << j.dump() << '\n';
      out.flush();
      if (!out) {
        throw std::runtime_error("write failed");
      }
    }
    fs::rename(tmp, target);
  } catch (const std::exception& e) {
    spdlog::warn("workspace {}: snapshot not written: {}", id_.str(), e.what());
  }
}

}  // namespace meco::repository

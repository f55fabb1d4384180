#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "meco/core/ids.hpp"
#include "meco/core/time.hpp"
#include "meco/repository/similarity.hpp"
#include "meco/repository/workspace_store.hpp"

namespace meco::repository {

struct RepositoryOptions {
  std::filesystem::path data_dir;
  StoreOptions store;
  bool repair_torn_tail = true;
  LogWriterFactory writers = default_log_writer_factory();
};

// The collaborative repository: every workspace's store under one data
// directory, plus cross-workspace lookups and reads.
class Repository {
 public:
  using Listener = std::function<void(const knowledge::ActivityEvent&, const WorkspaceState&)>;

  // Opens every workspace directory found under data_dir, replaying its log.
  explicit Repository(RepositoryOptions options, Clock clock = system_clock(), IdSource ids = random_id_source());
  ~Repository();

  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  const RepositoryOptions& options() const noexcept { return options_; }

  // Throws already_exists, or invalid_argument for ids unusable as directory names.
  WorkspaceStore& create_workspace(const WorkspaceId& id);
  WorkspaceStore& ensure_workspace(const WorkspaceId& id);
  // Throws unknown_workspace.
  WorkspaceStore& workspace(const WorkspaceId& id);
  const WorkspaceStore& workspace(const WorkspaceId& id) const;
  WorkspaceStore* find_workspace(const WorkspaceId& id);
  bool has_workspace(const WorkspaceId& id) const;
  std::vector<WorkspaceId> workspace_ids() const;

  knowledge::ActivityEvent append_event(const WorkspaceId& ws, const UserId& actor, knowledge::ActivityPayload payload);
  knowledge::ActivityEvent commit(const WorkspaceId& ws, const UserId& actor, const WorkspaceStore::Builder& build);

  std::optional<WorkspaceId> workspace_of(const ProblemId& id) const;
  std::optional<WorkspaceId> workspace_of(const DocumentId& id) const;
  // Throws unknown_problem.
  StoredProblem problem(const ProblemId& id) const;

  // Every problem of every workspace.
  std::vector<StoredProblem> corpus() const;

  // Listeners run on the committing thread under that workspace's writer lock.
  // Once remove_listener returns, the listener is not running and never will.
  std::size_t add_listener(Listener listener);
  void remove_listener(std::size_t token);

  std::string new_id(std::string_view prefix) const { return ids_(prefix); }
  Timestamp now() const { return clock_(); }
  const Clock& clock() const noexcept { return clock_; }

  void write_snapshots() const;

 private:
  WorkspaceStore& install(std::unique_ptr<WorkspaceStore> store);
  void on_event(const knowledge::ActivityEvent& event, const WorkspaceState& state);

  RepositoryOptions options_;
  Clock clock_;
  IdSource ids_;

  // Held across create so two callers cannot both open the same directory.
  std::mutex create_mu_;
  mutable std::shared_mutex workspaces_mu_;
  std::map<WorkspaceId, std::unique_ptr<WorkspaceStore>> workspaces_;

  mutable std::shared_mutex index_mu_;
  std::map<ProblemId, WorkspaceId> problem_index_;
  std::map<DocumentId, WorkspaceId> document_index_;

  mutable std::shared_mutex listeners_mu_;
  std::map<std::size_t, Listener> listeners_;
  std::size_t next_listener_ = 0;
};

}  // namespace meco::repository

#include "meco/repository/repository.hpp"

#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"

namespace meco::repository {

namespace fs = std::filesystem;
using knowledge::ActivityEvent;

Repository::Repository(RepositoryOptions options, Clock clock, IdSource ids)
    : options_(std::move(options)), clock_(std::move(clock)), ids_(std::move(ids)) {
  std::error_code ec;
  fs::create_directories(options_.data_dir, ec);
  if (ec) {
    throw Error(ErrorCode::storage_failure, "cannot create data dir " + options_.data_dir.string() + ": " + ec.message());
  }
  for (const auto& entry : fs::directory_iterator(options_.data_dir)) {
    auto name = entry.path().filename().string();
    if (!entry.is_directory() || !is_valid_workspace_id(name)) {
      continue;
    }
    WorkspaceId id(name);
    install(WorkspaceStore::open(id, entry.path(), options_.store, clock_, options_.writers, options_.repair_torn_tail));
  }
}

Repository::~Repository() { write_snapshots(); }

WorkspaceStore& Repository::install(std::unique_ptr<WorkspaceStore> store) {
  store->read([this](const WorkspaceState& state) {
    std::unique_lock lock(index_mu_);
    for (const auto& [id, _] : state.problems) {
      problem_index_[id] = state.workspace;
    }
    for (const auto& [id, _] : state.documents) {
      document_index_[id] = state.workspace;
    }
  });
  store->set_listener([this](const ActivityEvent& event, const WorkspaceState& state) { on_event(event, state); });
  std::unique_lock lock(workspaces_mu_);
  auto& slot = workspaces_[store->id()];
  slot = std::move(store);
  return *slot;
}

WorkspaceStore& Repository::create_workspace(const WorkspaceId& id) {
  if (!is_valid_workspace_id(id.str())) {
    throw Error(ErrorCode::invalid_argument, "invalid workspace id: " + id.str());
  }
  std::lock_guard guard(create_mu_);
  if (has_workspace(id)) {
    throw Error(ErrorCode::already_exists, "workspace exists: " + id.str());
  }
  return install(WorkspaceStore::open(id, options_.data_dir / id.str(), options_.store, clock_, options_.writers,
                                      options_.repair_torn_tail));
}

WorkspaceStore& Repository::ensure_workspace(const WorkspaceId& id) {
  if (auto* ws = find_workspace(id)) {
    return *ws;
  }
  try {
    return create_workspace(id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::already_exists) {
      throw;
    }
    return workspace(id);
  }
}

WorkspaceStore* Repository::find_workspace(const WorkspaceId& id) {
  std::shared_lock lock(workspaces_mu_);
  auto it = workspaces_.find(id);
  return it == workspaces_.end() ? nullptr : it->second.get();
}

WorkspaceStore& Repository::workspace(const WorkspaceId& id) {
  if (auto* ws = find_workspace(id)) {
    return *ws;
  }
  throw Error(ErrorCode::unknown_workspace, "unknown workspace: " + id.str());
}

const WorkspaceStore& Repository::workspace(const WorkspaceId& id) const {
  return const_cast<Repository*>(this)->workspace(id);
}

bool Repository::has_workspace(const WorkspaceId& id) const {
  std::shared_lock lock(workspaces_mu_);
  return workspaces_.contains(id);
}

std::vector<WorkspaceId> Repository::workspace_ids() const {
  std::shared_lock lock(workspaces_mu_);
  std::vector<WorkspaceId> ids;
  ids.reserve(workspaces_.size());
  for (const auto& [id, _] : workspaces_) {
    ids.push_back(id);
  }
  return ids;
}

ActivityEvent Repository::append_event(const WorkspaceId& ws, const UserId& actor, knowledge::ActivityPayload payload) {
  return workspace(ws).append(actor, std::move(payload));
}

ActivityEvent Repository::commit(const WorkspaceId& ws, const UserId& actor, const WorkspaceStore::Builder& build) {
  return workspace(ws).commit(actor, build);
}

std::optional<WorkspaceId> Repository::workspace_of(const ProblemId& id) const {
  std::shared_lock lock(index_mu_);
  auto it = problem_index_.find(id);
  return it == problem_index_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<WorkspaceId> Repository::workspace_of(const DocumentId& id) const {
  std::shared_lock lock(index_mu_);
  auto it = document_index_.find(id);
  return it == document_index_.end() ? std::nullopt : std::optional(it->second);
}

StoredProblem Repository::problem(const ProblemId& id) const {
  auto ws = workspace_of(id);
  if (!ws) {
    throw Error(ErrorCode::unknown_problem, "unknown problem: " + id.str());
  }
  return workspace(*ws).read([&](const WorkspaceState& state) {
    return StoredProblem{state.workspace, state.problems.at(id), state.participants};
  });
}

std::vector<StoredProblem> Repository::corpus() const {
  std::vector<StoredProblem> out;
  std::vector<const WorkspaceStore*> stores;
  {
    std::shared_lock lock(workspaces_mu_);
    for (const auto& [_, store] : workspaces_) {
      stores.push_back(store.get());
    }
  }
  for (const auto* store : stores) {
    store->read([&](const WorkspaceState& state) {
      for (const auto& [_, p] : state.problems) {
        out.push_back({state.workspace, p, state.participants});
      }
    });
  }
  return out;
}

std::size_t Repository::add_listener(Listener listener) {
  std::unique_lock lock(listeners_mu_);
  auto token = next_listener_++;
  listeners_.emplace(token, std::move(listener));
  return token;
}

void Repository::remove_listener(std::size_t token) {
  std::unique_lock lock(listeners_mu_);
  listeners_.erase(token);
}

void Repository::on_event(const ActivityEvent& event, const WorkspaceState& state) {
  {
    std::unique_lock lock(index_mu_);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, knowledge::ProblemEdit>) {
            problem_index_[p.problem.id] = event.workspace;
          } else if constexpr (std::is_same_v<T, knowledge::AnnotationAdded>) {
            if (p.sub_problem) {
              problem_index_[p.sub_problem->id] = event.workspace;
            }
          } else if constexpr (std::is_same_v<T, knowledge::DocumentOpened>) {
            document_index_[p.document.id] = event.workspace;
          }
        },
        event.payload);
  }
  std::shared_lock lock(listeners_mu_);
  for (const auto& [_, listener] : listeners_) {
    listener(event, state);
  }
}

void Repository::write_snapshots() const {
  std::shared_lock lock(workspaces_mu_);
  for (const auto& [_, store] : workspaces_) {
    store->write_snapshot();
  }
}

}  // namespace meco::repository

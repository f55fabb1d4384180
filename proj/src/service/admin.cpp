#include "meco/service/admin.hpp"

#include <fstream>
#include <sstream>

#include "meco/core/error.hpp"
#include "meco/repository/event_log.hpp"
#include "meco/repository/workspace_store.hpp"

namespace meco::service {

namespace fs = std::filesystem;
using repository::WorkspaceState;

namespace {

struct Folded {
  WorkspaceState state;
  std::vector<knowledge::ActivityEvent> events;
};

// Folds the log, stopping at the first corrupt record or rejected event.
Folded fold_log(const fs::path& dir, const WorkspaceId& ws, std::size_t query_capacity,
                std::optional<VerifyIssue>& issue) {
  Folded out;
  out.state.workspace = ws;
  auto log = dir / repository::kEventLogFile;
  if (!fs::exists(log)) {
    return out;
  }
  auto read = repository::read_event_log(log, ws);
  repository::FoldOptions options;
  options.query_capacity = query_capacity;
  for (auto& event : read.events) {
    try {
      repository::check_event(out.state, event);
    } catch (const Error& e) {
      issue = VerifyIssue{ws, "event " + std::to_string(event.seq) + " rejected: " + e.what(), std::nullopt};
      return out;
    }
    repository::apply_event(out.state, event, options);
    out.events.push_back(std::move(event));
  }
  if (read.corruption) {
    const auto& c = *read.corruption;
    issue = VerifyIssue{ws, "corrupt record at line " + std::to_string(c.line) + ": " + c.reason, c.offset};
  }
  return out;
}

}  // namespace

ReplayResult replay_workspace(const fs::path& data_dir, const WorkspaceId& ws, std::size_t query_capacity) {
  auto dir = data_dir / ws.str();
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::unknown_workspace, "no workspace directory " + dir.string());
  }
  std::optional<VerifyIssue> issue;
  auto folded = fold_log(dir, ws, query_capacity, issue);
  if (issue) {
    auto where = issue->offset ? " (offset " + std::to_string(*issue->offset) + ")" : std::string();
    throw Error(ErrorCode::corrupt_log, ws.str() + ": " + issue->message + where);
  }
  return {std::move(folded.state), folded.events.size()};
}

InspectSummary inspect_workspace(const fs::path& data_dir, const WorkspaceId& ws) {
  auto replay = replay_workspace(data_dir, ws);
  const auto& s = replay.state;
  InspectSummary out;
  out.workspace = ws;
  out.events = replay.events;
  out.problems = s.problems.size();
  out.root_problems = s.roots.size();
  out.annotations = s.annotations.size();
  out.documents = s.documents.size();
  out.participants = s.participants.size();
  for (auto process : knowledge::kAllKnowledgeProcesses) {
    auto it = s.process_tally.find(process);
    out.tally[process] = it == s.process_tally.end() ? 0 : it->second;
  }
  // The state keeps only the per-process tally; per-kind counts need the log.
  auto log = data_dir / ws.str() / repository::kEventLogFile;
  if (fs::exists(log)) {
    for (const auto& event : repository::read_event_log(log, ws).events) {
      ++out.kinds[event.kind()];
    }
  }
  return out;
}

std::string format_summary(const InspectSummary& s) {
  std::ostringstream out;
  out << "workspace " << s.workspace.str() << '\n'
      << "events " << s.events << '\n'
      << "problems " << s.problems << " (" << s.root_problems << " root)\n"
      << "annotations " << s.annotations << '\n'
      << "documents " << s.documents << '\n'
      << "participants " << s.participants << '\n';
  for (const auto& [process, n] : s.tally) {
    out << "process " << knowledge::to_string(process) << ' ' << n << '\n';
  }
  for (const auto& [kind, n] : s.kinds) {
    out << "kind " << knowledge::to_string(kind) << ' ' << n << '\n';
  }
  return out.str();
}

VerifyReport verify_data_dir(const fs::path& data_dir) {
  VerifyReport report;
  if (!fs::is_directory(data_dir)) {
    report.issues.push_back({WorkspaceId(), "no data directory " + data_dir.string(), std::nullopt});
    return report;
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (entry.is_directory()) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    WorkspaceId ws(dir.filename().string());
    ++report.workspaces;

    std::optional<nlohmann::json> snapshot;
    std::size_t capacity = 50;
    auto snapshot_path = dir / repository::kSnapshotFile;
    if (fs::exists(snapshot_path)) {
      std::ifstream in(snapshot_path);
      auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        report.issues.push_back({ws, "snapshot file is not valid JSON", std::nullopt});
      } else {
        capacity = j.value("query_capacity", capacity);
        snapshot = std::move(j);
      }
    }

    std::optional<VerifyIssue> issue;
    auto folded = fold_log(dir, ws, capacity, issue);
    report.events += folded.events.size();
    if (issue) {
      report.issues.push_back(std::move(*issue));
      continue;
    }
    if (!snapshot) {
      continue;
    }
    try {
      auto stored = repository::state_from_json(*snapshot);
      if (stored.seq > folded.state.seq) {
        report.issues.push_back(
            {ws, "snapshot covers seq " + std::to_string(stored.seq) + " but the log ends at " +
                     std::to_string(folded.state.seq), std::nullopt});
        continue;
      }
      // The snapshot may lag the log; compare with the matching prefix.
      WorkspaceState prefix;
      prefix.workspace = ws;
      repository::FoldOptions options;
      options.query_capacity = capacity;
      for (const auto& event : folded.events) {
        if (event.seq > stored.seq) {
          break;
        }
        repository::apply_event(prefix, event, options);
      }
      if (!(prefix == stored)) {
        report.issues.push_back(
            {ws, "snapshot differs from replay of the first " + std::to_string(stored.seq) + " events", std::nullopt});
      }
    } catch (const std::exception& e) {
      report.issues.push_back({ws, std::string("snapshot unreadable: ") + e.what(), std::nullopt});
    }
  }
  return report;
}

}  // namespace meco::service

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meco/knowledge/activity.hpp"
#include "meco/repository/state.hpp"

// Read-only replays of a data directory for the operator CLI. Nothing here
// modifies files, so a torn tail is reported rather than repaired.

namespace meco::service {

struct ReplayResult {
  repository::WorkspaceState state;
  std::uint64_t events = 0;
};

// Folds the whole log. Throws Error(corrupt_log) naming the offset of the
// first bad record, or Error(unknown_workspace).
ReplayResult replay_workspace(const std::filesystem::path& data_dir, const WorkspaceId& ws,
                              std::size_t query_capacity = 50);

struct InspectSummary {
  WorkspaceId workspace;
  std::uint64_t events = 0;
  std::size_t problems = 0;
  std::size_t root_problems = 0;
  std::size_t annotations = 0;
  std::size_t documents = 0;
  std::size_t participants = 0;
  std::map<knowledge::KnowledgeProcess, std::uint64_t> tally;
  std::map<knowledge::ActivityKind, std::uint64_t> kinds;
};

InspectSummary inspect_workspace(const std::filesystem::path& data_dir, const WorkspaceId& ws);
std::string format_summary(const InspectSummary& summary);

struct VerifyIssue {
  WorkspaceId workspace;
  std::string message;
  std::optional<std::uint64_t> offset;
};

struct VerifyReport {
  std::size_t workspaces = 0;
  std::uint64_t events = 0;
  std::vector<VerifyIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
};

// Replays every workspace log and compares each snapshot file with the fold
// of the log prefix it claims to cover.
VerifyReport verify_data_dir(const std::filesystem::path& data_dir);

}  // namespace meco::service

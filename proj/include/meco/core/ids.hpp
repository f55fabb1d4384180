#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

namespace meco {

// Opaque identifier tagged by the entity it names, so a ProblemId can never
// be passed where a DocumentId is expected.
template <typename Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend bool operator==(const StrongId&, const StrongId&) = default;

 private:
  std::string value_;
};

using UserId = StrongId<struct UserTag>;
using WorkspaceId = StrongId<struct WorkspaceTag>;
using ProblemId = StrongId<struct ProblemTag>;
using DocumentId = StrongId<struct DocumentTag>;
using AnnotationId = StrongId<struct AnnotationTag>;

// Workspace-wide event sequence number; the first event is 1.
using Seq = std::uint64_t;

// Produces fresh identifiers of the form "<prefix>_<suffix>".
using IdSource = std::function<std::string(std::string_view prefix)>;

// 64 random bits rendered as hex.
IdSource random_id_source();

// prefix_1, prefix_2, ... shared across prefixes. Deterministic; for tests and tooling.
IdSource sequential_id_source();

// Workspace ids double as directory names.
bool is_valid_workspace_id(std::string_view id) noexcept;

}  // namespace meco

template <typename Tag>
struct std::hash<meco::StrongId<Tag>> {
  std::size_t operator()(const meco::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

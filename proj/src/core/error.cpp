#include "meco/core/error.hpp"

namespace meco {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::empty_statement: return "empty_statement";
    case ErrorCode::empty_body: return "empty_body";
    case ErrorCode::unknown_parent: return "unknown_parent";
    case ErrorCode::unknown_target: return "unknown_target";
    case ErrorCode::unknown_problem: return "unknown_problem";
    case ErrorCode::unknown_document: return "unknown_document";
    case ErrorCode::unknown_workspace: return "unknown_workspace";
    case ErrorCode::unknown_kind: return "unknown_kind";
    case ErrorCode::kind_target_mismatch: return "kind_target_mismatch";
    case ErrorCode::already_exists: return "already_exists";
    case ErrorCode::not_a_member: return "not_a_member";
    case ErrorCode::leader_has_no_document: return "leader_has_no_document";
    case ErrorCode::storage_failure: return "storage_failure";
    case ErrorCode::corrupt_log: return "corrupt_log";
    case ErrorCode::invalid_event: return "invalid_event";
  }
  return "unknown";
}

}  // namespace meco

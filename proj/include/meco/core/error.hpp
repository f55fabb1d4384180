#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meco {

enum class ErrorCode {
  invalid_argument,
  empty_statement,
  empty_body,
  unknown_parent,
  unknown_target,
  unknown_problem,
  unknown_document,
  unknown_workspace,
  unknown_kind,
  kind_target_mismatch,
  already_exists,
  not_a_member,
  leader_has_no_document,
  storage_failure,
  corrupt_log,
  invalid_event,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure that crosses a module boundary is reported as an Error
// carrying a machine-readable code. The HTTP layer maps codes to statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace meco

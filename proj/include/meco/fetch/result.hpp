#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace meco::fetch {

enum class FetchStatus { ok, http_error, network_error, too_large, unsupported_type };

std::string_view to_string(FetchStatus status) noexcept;
std::optional<FetchStatus> parse_fetch_status(std::string_view name) noexcept;

// Outcome of retrieving one URL. text and title are empty unless status is ok;
// http_code is set for http_error (and for ok, the final response code).
struct FetchResult {
  std::string url;
  FetchStatus status = FetchStatus::network_error;
  int http_code = 0;
  std::string title;
  std::string text;
  std::uint64_t byte_size = 0;
  std::string detail;

  bool ok() const noexcept { return status == FetchStatus::ok; }

  friend bool operator==(const FetchResult&, const FetchResult&) = default;
};

}  // namespace meco::fetch

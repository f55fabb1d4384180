#include "meco/fetch/result.hpp"

namespace meco::fetch {

std::string_view to_string(FetchStatus status) noexcept {
  switch (status) {
    case FetchStatus::ok: return "ok";
    case FetchStatus::http_error: return "http_error";
    case FetchStatus::network_error: return "network_error";
    case FetchStatus::too_large: return "too_large";
    case FetchStatus::unsupported_type: return "unsupported_type";
  }
  return "";
}

std::optional<FetchStatus> parse_fetch_status(std::string_view name) noexcept {
  for (auto s : {FetchStatus::ok, FetchStatus::http_error, FetchStatus::network_error, FetchStatus::too_large,
                 FetchStatus::unsupported_type}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  return std::nullopt;
}

}  // namespace meco::fetch

#include "meco/core/ids.hpp"

#include <atomic>
#include <cstdio>

namespace meco {

IdSource random_id_source() {
  struct State {
    std::mutex mu;
    std::mt19937_64 rng{std::random_device{}()};
  };
  auto state = std::make_shared<State>();
  return [state](std::string_view prefix) {
    std::uint64_t bits = 0;
    {
      std::lock_guard lock(state->mu);
      bits = state->rng();
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
    std::string id(prefix);
    id += '_';
    id += buf;
    return id;
  };
}

IdSource sequential_id_source() {
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return [counter](std::string_view prefix) {
    std::string id(prefix);
    id += '_';
    id += std::to_string(++*counter);
    return id;
  };
}

bool is_valid_workspace_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64) {
    return false;
  }
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_';
    if (!ok) {
      return false;
    }
  }
  return id != "." && id != "..";
}

}  // namespace meco

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace meco {

// UTC instant at millisecond resolution. Millisecond precision is what the
// event log stores, so values round-trip through it exactly.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

using Clock = std::function<Timestamp()>;

Timestamp system_now();
Clock system_clock();

// "2026-10-18T09:15:02.123Z"
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view text);

// A clock the caller advances by hand.
class ManualClock {
 public:
  explicit ManualClock(Timestamp start) : now_(std::make_shared<Timestamp>(start)) {}

  void advance(std::chrono::milliseconds d) { *now_ += d; }
  void set(Timestamp t) { *now_ = t; }
  Timestamp now() const { return *now_; }

  // The returned clock shares state with this object.
  Clock clock() const {
    auto now = now_;
    return [now] { return *now; };
  }

 private:
  std::shared_ptr<Timestamp> now_;
};

}  // namespace meco

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace habilis {

// Milliseconds-since-epoch clock, injectable so tests and the simulator can
// drive logical time.
using ClockMillisFn = std::function<std::int64_t()>;

inline std::int64_t wall_clock_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace habilis

#include "imu_guard/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace imu_guard {

unsigned effective_parallelism(unsigned requested) {
  unsigned value = std::max(1u, requested);
  if (const char* env = std::getenv("IMU_GUARD_THREADS")) {
    const std::string_view text(env);
    unsigned cap = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (res.ec == std::errc() && cap > 0) value = std::min(value, cap);
  }
  return value;
}

}  // namespace imu_guard

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imu_guard {

enum class ErrorKind {
  invalid_rotation,
  ordering,
  gap,
  empty_input,
  shape,
  configuration,
  insufficient_data,
  corrupted_report,
  resampling,
  no_overlap,
  rank_deficiency,
  parse,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind; the CLI maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace imu_guard

#pragma once

#include "imu_guard/core.hpp"
#include "imu_guard/detect.hpp"
#include "imu_guard/dtw.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imu_guard::mitigate {

enum class Mode { clamp, moving_average, template_substitution };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view name);

struct MitigationConfig {
  Mode mode = Mode::clamp;
  /// Predecessor count for moving_average.
  std::size_t window_n = 5;

  void validate() const;
};

struct LogEntry {
  std::size_t start_index = 0;
  std::size_t length = 1;
  /// Accelerometer axis for per-sample rules.
  std::optional<int> axis;
  /// "clamp", "moving_average", "clamp_fallback" or "template".
  std::string rule;
  std::optional<std::string> template_id;
  std::optional<double> old_value;
  std::optional<double> new_value;
};

struct MitigationResult {
  ImuStream stream;
  std::vector<LogEntry> log;
};

/// Replaces flagged axis values: clamp to reference +/- threshold keeping the
/// deviation sign, or the mean of the previous window_n unflagged values on
/// that axis (falling back to clamp when there are none).
MitigationResult mitigate_threshold(std::span<const ImuSample> stream,
                                    const detect::DetectionReport& report,
                                    const MitigationConfig& cfg);

/// Overwrites every abnormal slice with its matched template, linearly
/// resampled to the slice length. Only the library's channels are replaced.
MitigationResult mitigate_dtw(std::span<const ImuSample> stream,
                              const detect::DetectionReport& report,
                              const detect::TemplateLibrary& library,
                              const MitigationConfig& cfg);

/// Linear interpolation along the row index from N to `rows` rows.
dtw::Series resample_rows(const dtw::Series& series, std::size_t rows);

std::string log_to_jsonl(const std::vector<LogEntry>& log);

}  // namespace imu_guard::mitigate

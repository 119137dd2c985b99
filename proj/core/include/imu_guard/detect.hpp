#pragma once

#include "imu_guard/core.hpp"
#include "imu_guard/dtw.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imu_guard::detect {

enum class Mode { threshold, dtw };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view name);

/// How samples become DTW rows: (ax, ay, az) for 3 dims, (ax, ay, az,
/// w*gx, w*gy, w*gz) for 6 dims with w = gyro_weight.
struct SeriesLayout {
  std::size_t dims = 6;
  double gyro_weight = 1.0;
  /// Per-channel z-scoring before comparison. Off by default.
  bool zscore = false;

  void validate() const;
};

dtw::Series to_series(std::span<const ImuSample> samples, const SeriesLayout& layout);

struct Slice {
  std::size_t start_index = 0;
  std::span<const ImuSample> samples;
};

struct SlicedStream {
  std::vector<Slice> slices;
  /// Trailing partial window; passed through undetected.
  std::size_t residual_start = 0;
  std::size_t residual_length = 0;
};

/// floor(len / M) contiguous, non-overlapping slices of M samples.
SlicedStream slice_stream(std::span<const ImuSample> stream, std::size_t slice_len);

struct Template {
  std::string id;
  std::string label;
  /// Raw SI rows in layout channel order (gyro not weighted).
  dtw::Series rows;
  std::string source;
  std::size_t offset = 0;
};

struct TemplateLibrary {
  static constexpr int kVersion = 1;

  SeriesLayout layout;
  std::size_t length = 0;
  std::vector<Template> templates;

  /// Series used for matching (gyro weighted, optionally z-scored).
  std::vector<dtw::Series> matching_series() const;
  const Template* find(std::string_view id) const;
  void validate() const;
};

std::string library_to_json(const TemplateLibrary& library);
TemplateLibrary library_from_json(const std::string& text);
void save_library(const std::filesystem::path& path, const TemplateLibrary& library);
TemplateLibrary load_library(const std::filesystem::path& path);

struct Recording {
  std::string label;
  std::string source;
  ImuStream stream;
};

struct ExtractionOptions {
  SeriesLayout layout;
  /// Candidate window spacing; defaults to the template length.
  std::optional<std::size_t> stride;
};

/// Picks k windows of length N by per-label k-medoids under DTW distance.
/// Labels share k in proportion to their candidate counts, at least one each.
TemplateLibrary extract_templates(std::span<const Recording> recordings, std::size_t length,
                                  std::size_t count, const ExtractionOptions& options = {},
                                  unsigned parallelism = 1);

struct DetectorConfig {
  Mode mode = Mode::dtw;
  double acc_threshold = 0.0;  ///< m/s^2 per axis, threshold mode
  double dtw_threshold = 0.0;  ///< dtw mode
  std::shared_ptr<const TemplateLibrary> templates;
  std::size_t slice_len = 40;
  unsigned parallelism = 1;
  WorldModel world;

  void validate() const;
};

/// (0, 0, |g|): the reading of a static, level sensor.
Vec3 static_reference(const WorldModel& world);

enum class Verdict { normal, abnormal, unprocessed };

std::string_view to_string(Verdict v);

struct FlaggedSample {
  std::size_t index = 0;
  /// Bit 0 = x, bit 1 = y, bit 2 = z.
  std::uint8_t axes = 0;

  bool operator==(const FlaggedSample&) const = default;
};

struct Record {
  std::size_t start_index = 0;
  std::size_t length = 0;
  Verdict verdict = Verdict::normal;
  std::optional<double> best_distance;
  std::optional<std::string> template_id;
  std::vector<FlaggedSample> flagged;

  bool operator==(const Record&) const = default;
};

/// Threshold mode: one record per run of consecutive flagged samples.
/// DTW mode: one record per slice, plus an unprocessed residual record.
struct DetectionReport {
  Mode mode = Mode::dtw;
  std::size_t stream_length = 0;
  std::size_t slice_len = 0;
  std::size_t dims = 0;
  double threshold = 0.0;
  Vec3 reference = Vec3::Zero();
  std::vector<Record> records;

  bool operator==(const DetectionReport&) const = default;
};

DetectionReport detect_threshold(std::span<const ImuSample> stream, const DetectorConfig& cfg);
DetectionReport detect_dtw(const SlicedStream& sliced, std::size_t stream_length,
                           const DetectorConfig& cfg);
/// Slices the stream and runs the configured detector.
DetectionReport detect(std::span<const ImuSample> stream, const DetectorConfig& cfg);

/// One JSON object per line: a header line, then one line per record.
std::string report_to_jsonl(const DetectionReport& report);
DetectionReport report_from_jsonl(const std::string& text);

/// target_pass-quantile (nearest rank) of best-match distances over the
/// validation slices times `margin`, floored at `min_threshold`.
double calibrate_dtw_threshold(const TemplateLibrary& library,
                               std::span<const dtw::Series> validation, double target_pass,
                               double margin = 1.2, unsigned parallelism = 1,
                               double min_threshold = 1e-9);

/// Full-length slices of clean streams, as matching series.
std::vector<dtw::Series> validation_slices(std::span<const ImuStream> streams,
                                           std::size_t slice_len, const SeriesLayout& layout);

/// A slice is truly abnormal iff any of its samples is in the fault mask.
struct SliceScore {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;

  double recall() const;
  double false_positive_rate() const;
};

SliceScore score_slices(const DetectionReport& report, const std::vector<bool>& mask);

}  // namespace imu_guard::detect

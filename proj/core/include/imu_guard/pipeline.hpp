#pragma once

#include "imu_guard/core.hpp"
#include "imu_guard/detect.hpp"
#include "imu_guard/eval.hpp"
#include "imu_guard/ins.hpp"
#include "imu_guard/mitigate.hpp"
#include "imu_guard/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace imu_guard::pipeline {

inline constexpr int kConfigVersion = 1;

struct SimulationSettings {
  std::string preset = "n50_10";
  sim::TrajectorySpec trajectory;
  double acc_sigma = 0.1;    ///< m/s^2
  double gyro_sigma = 0.01;  ///< rad/s
  ImuBias bias;
  /// Overrides of the preset's glitch parameters.
  std::optional<double> glitch_mu;
  std::optional<double> glitch_sigma;
  double affected_fraction = 0.01;
  std::size_t burst_len = 5;
  std::uint8_t glitch_axes = 0b100;
  /// Clean runs of the same trajectory used as template history and for
  /// threshold calibration.
  std::size_t template_recordings = 3;
  std::size_t validation_recordings = 3;
};

struct LabeledPath {
  std::filesystem::path path;
  std::string label;
};

struct InputSettings {
  std::filesystem::path imu_csv;
  std::filesystem::path truth_tum;
  std::optional<std::filesystem::path> mask_json;
  std::optional<std::filesystem::path> templates_json;
  std::vector<LabeledPath> template_recordings;
  std::vector<std::filesystem::path> validation_csv;
};

struct TemplateSettings {
  std::size_t count = 10;
  std::size_t length = 10;
  std::optional<std::size_t> stride;
};

struct DetectorSettings {
  std::size_t dims = 6;
  std::size_t slice_len = 40;
  double acc_threshold = 12.0;
  std::optional<double> dtw_threshold;
  double target_pass = 0.99;
  double margin = 1.2;
  double gyro_weight = 1.0;
  bool zscore = false;
  unsigned parallelism = 4;
};

struct VariantSpec {
  std::string name;
  std::optional<detect::Mode> detector;
  std::optional<mitigate::Mode> mitigation;
};

struct PipelineConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  /// Empty: run in memory without writing artifacts.
  std::filesystem::path output_dir;
  std::optional<SimulationSettings> simulation;
  std::optional<InputSettings> input;
  TemplateSettings templates;
  DetectorSettings detector;
  std::size_t window_n = 5;
  ins::Method method = ins::Method::midpoint;
  std::optional<double> anchor_period = 1.0;
  ImuBias integrator_bias;
  eval::EvalConfig evaluation;
  std::vector<VariantSpec> variants = default_variants();

  static std::vector<VariantSpec> default_variants();
  /// Throws ErrorKind::configuration on inconsistent settings.
  void validate() const;
};

/// JSON or TOML text; the format is inferred from the first significant
/// character ('{' means JSON).
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

struct VariantResult {
  VariantSpec spec;
  eval::MetricReport metrics;
  std::size_t flagged_records = 0;
  std::size_t changed_samples = 0;
  std::optional<detect::SliceScore> slice_score;
};

struct PipelineResult {
  std::vector<VariantResult> variants;
  double dtw_threshold = 0.0;
  std::size_t stream_length = 0;
  std::size_t faulty_samples = 0;
  std::string summary_json;

  const VariantResult& variant(std::string_view name) const;
};

/// simulate -> templates -> detect -> mitigate -> integrate -> evaluate for
/// every variant. Stage failures are rethrown with the stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Child seed for a numbered sub-stream of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace imu_guard::pipeline

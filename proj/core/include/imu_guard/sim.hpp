#pragma once

#include "imu_guard/core.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace imu_guard::sim {

enum class Shape { ellipse3d, line, figure_eight };

std::string_view to_string(Shape s);
Shape parse_shape(std::string_view name);

struct TrajectorySpec {
  Shape shape = Shape::ellipse3d;
  double radius_x = 15.0;  ///< m
  double radius_y = 10.0;  ///< m
  double z_amplitude = 1.0;  ///< m
  /// Vertical oscillation frequency as a multiple of angular_rate.
  double z_frequency_ratio = 2.0;
  double roll_amplitude = 0.05;   ///< rad
  double pitch_amplitude = 0.05;  ///< rad
  double angular_rate = std::numbers::pi / 10.0;  ///< rad/s
  double speed = 1.0;    ///< m/s, line only
  double heading = 0.0;  ///< rad, line only
  double duration = 10.0;  ///< s
  std::size_t pose_count = 2000;
  double imu_rate = 200.0;  ///< Hz

  void validate() const;
  /// Poses per second; pose i is at i / pose_rate().
  double pose_rate() const { return static_cast<double>(pose_count) / duration; }
};

/// Exact kinematics at one instant.
struct KinematicState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 acc_world = Vec3::Zero();
  Quaternion q;  ///< body to world
  Vec3 gyro_body = Vec3::Zero();

  NavState nav() const { return {t, p, v, q}; }
};

/// Analytic path with closed-form derivatives plus its uniform sampling.
class GroundTruth {
 public:
  explicit GroundTruth(TrajectorySpec spec);

  const TrajectorySpec& spec() const { return spec_; }
  const std::vector<KinematicState>& samples() const { return samples_; }
  KinematicState at(double t) const;
  Trajectory trajectory() const;

 private:
  TrajectorySpec spec_;
  std::vector<KinematicState> samples_;
};

GroundTruth generate_truth(const TrajectorySpec& spec);

/// Applies the measurement model to the truth at `rate` Hz. Throws
/// ErrorKind::resampling when the rate exceeds the pose density.
ImuStream synthesize_imu(const GroundTruth& truth, const ImuBias& bias,
                         const NoiseSpec& noise, const WorldModel& world, double rate,
                         bool with_gyro = true);

struct GlitchSpec {
  double mu = 50.0;     ///< m/s^2
  double sigma = 10.0;  ///< m/s^2
  double affected_fraction = 0.01;
  std::size_t burst_len = 5;
  /// Bit 0 = x, bit 1 = y, bit 2 = z.
  std::uint8_t axes = 0b100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named regimes: n0_1, n1_10, n50_10.
GlitchSpec preset(std::string_view name);

struct GlitchResult {
  ImuStream stream;
  std::vector<bool> mask;
  std::vector<std::size_t> burst_starts;
};

GlitchResult inject_glitches(std::span<const ImuSample> stream, const GlitchSpec& spec);

std::string mask_to_json(const GlitchResult& result, const GlitchSpec& spec);
std::vector<bool> mask_from_json(const std::string& text);

}  // namespace imu_guard::sim

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace imu_guard {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance used when a unit quaternion is a precondition.
inline constexpr double kUnitTolerance = 1e-6;

/// Hamilton quaternion stored as (w, x, y, z).
class Quaternion {
 public:
  constexpr Quaternion() = default;
  constexpr Quaternion(double w, double x, double y, double z)
      : w_(w), x_(x), y_(y), z_(z) {}

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  /// Exact exponential map of a rotation vector.
  static Quaternion from_rotation_vector(const Vec3& rv);
  /// Intrinsic Z-Y-X (yaw, pitch, roll) composition.
  static Quaternion from_euler_zyx(double yaw, double pitch, double roll);
  static Quaternion from_rotation_matrix(const Mat3& r);

  constexpr double w() const { return w_; }
  constexpr double x() const { return x_; }
  constexpr double y() const { return y_; }
  constexpr double z() const { return z_; }
  Vec3 vec() const { return {x_, y_, z_}; }

  double norm() const;
  Quaternion normalized() const;
  bool is_unit(double tol = kUnitTolerance) const;
  constexpr Quaternion conjugate() const { return {w_, -x_, -y_, -z_}; }

  Quaternion operator*(const Quaternion& rhs) const;

  /// Rotates v by this (assumed unit) quaternion: q v q*.
  Vec3 rotate(const Vec3& v) const;
  Mat3 to_rotation_matrix() const;

  /// Z rotation of the Z-Y-X decomposition, radians.
  double yaw() const;
  /// Rotation angle in [0, pi], radians.
  double angle() const;

  bool operator==(const Quaternion&) const = default;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

Vec3 rotate(const Quaternion& q, const Vec3& v);

/// Shortest-arc spherical interpolation, u in [0, 1].
Quaternion slerp(const Quaternion& a, const Quaternion& b, double u);

/// ZYX Euler angles (yaw, pitch, roll) of a rotation matrix.
Vec3 euler_zyx(const Mat3& r);

struct ImuSample {
  double t = 0.0;
  Vec3 acc = Vec3::Zero();
  /// Absent (not zero) for accelerometer-only streams.
  std::optional<Vec3> gyro;
};

using ImuStream = std::vector<ImuSample>;

struct ImuBias {
  Vec3 acc = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

struct NoiseSpec {
  double acc_sigma = 0.0;
  double gyro_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct WorldModel {
  /// Vector added to the true acceleration before rotation into the body
  /// frame, so a static level sensor reads +|g| on z.
  Vec3 gravity{0.0, 0.0, 9.81};

  /// Accepts |g| outside [9.0, 10.5] only when allow_unphysical is set.
  void validate(bool allow_unphysical = false) const;
};

struct NavState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  /// Body-to-world orientation.
  Quaternion q;
};

using Trajectory = std::vector<NavState>;

/// Seeded white-noise generator for the measurement model.
class ImuNoise {
 public:
  explicit ImuNoise(const NoiseSpec& spec);

  Vec3 acc();
  Vec3 gyro();

 private:
  Vec3 draw(double sigma);

  NoiseSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Measurement model: acc = q_bw (a_w + g_w) + b_a + n_a, gyro = w_b + b_g + n_g.
///
/// `body_to_world` is the stored body orientation; its conjugate maps world
/// vectors into the body frame. Throws ErrorKind::invalid_rotation when it is
/// not unit-norm.
ImuSample measure(double t, const Vec3& true_acc_world,
                  const Vec3& true_gyro_body, const Quaternion& body_to_world,
                  const ImuBias& bias, const WorldModel& world, ImuNoise& noise);

/// Bias- and gravity-corrected world acceleration: q_wb (acc - b_a) - g_w.
Vec3 world_acceleration(const Vec3& measured_acc, const Quaternion& body_to_world,
                        const ImuBias& bias, const WorldModel& world);

/// Throws on non-finite values or non-increasing timestamps.
void validate_stream(std::span<const ImuSample> stream);
void validate_trajectory(std::span<const NavState> trajectory);

bool has_gyro(std::span<const ImuSample> stream);

}  // namespace imu_guard

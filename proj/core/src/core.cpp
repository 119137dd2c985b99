#include "imu_guard/core.hpp"

#include "imu_guard/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace imu_guard {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_rotation: return "invalid-rotation";
    case ErrorKind::ordering: return "ordering";
    case ErrorKind::gap: return "gap";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::shape: return "shape";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::corrupted_report: return "corrupted-report";
    case ErrorKind::resampling: return "resampling";
    case ErrorKind::no_overlap: return "no-overlap";
    case ErrorKind::rank_deficiency: return "rank-deficiency";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return {};
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), u.x() * s, u.y() * s, u.z() * s};
}

Quaternion Quaternion::from_rotation_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-12) {
    // Second-order expansion keeps the result unit to machine precision.
    return Quaternion(1.0, 0.5 * rv.x(), 0.5 * rv.y(), 0.5 * rv.z()).normalized();
  }
  return from_axis_angle(rv, angle);
}

Quaternion Quaternion::from_euler_zyx(double yaw, double pitch, double roll) {
  return from_axis_angle(Vec3::UnitZ(), yaw) *
         from_axis_angle(Vec3::UnitY(), pitch) *
         from_axis_angle(Vec3::UnitX(), roll);
}

Quaternion Quaternion::from_rotation_matrix(const Mat3& r) {
  // Shepperd's method: branch on the largest diagonal term.
  const double trace = r.trace();
  Quaternion q;
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(trace + 1.0);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
         (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s,
         (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s,
         (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s,
         (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  return q.normalized();
}

double Quaternion::norm() const {
  return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0 || !std::isfinite(n)) {
    fail(ErrorKind::invalid_rotation, "cannot normalize quaternion of norm " +
                                          std::to_string(n));
  }
  return {w_ / n, x_ / n, y_ / n, z_ / n};
}

bool Quaternion::is_unit(double tol) const {
  return std::abs(norm() - 1.0) <= tol;
}

Quaternion Quaternion::operator*(const Quaternion& r) const {
  return {w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_,
          w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_,
          w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_,
          w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_};
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  const Vec3 u = vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + w_ * t + u.cross(t);
}

Mat3 Quaternion::to_rotation_matrix() const {
  Mat3 r;
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  r << ww + xx - yy - zz, 2 * (x_ * y_ - w_ * z_), 2 * (x_ * z_ + w_ * y_),
      2 * (x_ * y_ + w_ * z_), ww - xx + yy - zz, 2 * (y_ * z_ - w_ * x_),
      2 * (x_ * z_ - w_ * y_), 2 * (y_ * z_ + w_ * x_), ww - xx - yy + zz;
  return r;
}

double Quaternion::yaw() const {
  return std::atan2(2.0 * (w_ * z_ + x_ * y_), 1.0 - 2.0 * (y_ * y_ + z_ * z_));
}

double Quaternion::angle() const {
  const double s = vec().norm();
  return 2.0 * std::atan2(s, std::abs(w_));
}

Vec3 rotate(const Quaternion& q, const Vec3& v) { return q.rotate(v); }

Quaternion slerp(const Quaternion& a, const Quaternion& b, double u) {
  double dot = a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
  Quaternion target = b;
  if (dot < 0.0) {
    dot = -dot;
    target = Quaternion(-b.w(), -b.x(), -b.y(), -b.z());
  }
  double wa = 1.0 - u;
  double wb = u;
  if (dot < 1.0 - 1e-12) {
    const double theta = std::acos(std::min(dot, 1.0));
    const double s = std::sin(theta);
    wa = std::sin((1.0 - u) * theta) / s;
    wb = std::sin(u * theta) / s;
  }
  return Quaternion(wa * a.w() + wb * target.w(), wa * a.x() + wb * target.x(),
                    wa * a.y() + wb * target.y(), wa * a.z() + wb * target.z())
      .normalized();
}

Vec3 euler_zyx(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  return {yaw, pitch, roll};
}

void WorldModel::validate(bool allow_unphysical) const {
  if (!gravity.allFinite()) {
    fail(ErrorKind::configuration, "gravity must be finite");
  }
  const double g = gravity.norm();
  if (!allow_unphysical && (g < 9.0 || g > 10.5)) {
    fail(ErrorKind::configuration,
         "|gravity| = " + std::to_string(g) + " outside [9.0, 10.5]");
  }
}

ImuNoise::ImuNoise(const NoiseSpec& spec) : spec_(spec), rng_(spec.seed) {
  if (!(spec.acc_sigma >= 0.0) || !(spec.gyro_sigma >= 0.0)) {
    fail(ErrorKind::configuration, "noise sigmas must be >= 0");
  }
}

Vec3 ImuNoise::draw(double sigma) {
  if (sigma == 0.0) return Vec3::Zero();
  Vec3 n;
  for (int i = 0; i < 3; ++i) n[i] = sigma * normal_(rng_);
  return n;
}

Vec3 ImuNoise::acc() { return draw(spec_.acc_sigma); }
Vec3 ImuNoise::gyro() { return draw(spec_.gyro_sigma); }

ImuSample measure(double t, const Vec3& true_acc_world,
                  const Vec3& true_gyro_body, const Quaternion& body_to_world,
                  const ImuBias& bias, const WorldModel& world, ImuNoise& noise) {
  if (!body_to_world.is_unit()) {
    fail(ErrorKind::invalid_rotation,
         "measure: orientation norm " + std::to_string(body_to_world.norm()));
  }
  ImuSample s;
  s.t = t;
  s.acc = body_to_world.conjugate().rotate(true_acc_world + world.gravity) +
          bias.acc + noise.acc();
  s.gyro = true_gyro_body + bias.gyro + noise.gyro();
  return s;
}

Vec3 world_acceleration(const Vec3& measured_acc, const Quaternion& body_to_world,
                        const ImuBias& bias, const WorldModel& world) {
  return body_to_world.rotate(measured_acc - bias.acc) - world.gravity;
}

void validate_stream(std::span<const ImuSample> stream) {
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& s = stream[i];
    if (!std::isfinite(s.t) || !s.acc.allFinite() ||
        (s.gyro && !s.gyro->allFinite())) {
      fail(ErrorKind::parse, "sample " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(s.t > stream[i - 1].t)) {
      fail(ErrorKind::ordering,
           "timestamps not strictly increasing at sample " + std::to_string(i));
    }
    if (s.gyro.has_value() != stream[0].gyro.has_value()) {
      fail(ErrorKind::shape, "gyro presence differs at sample " + std::to_string(i));
    }
  }
}

void validate_trajectory(std::span<const NavState> trajectory) {
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& s = trajectory[i];
    if (!std::isfinite(s.t) || !s.p.allFinite() || !s.v.allFinite()) {
      fail(ErrorKind::parse, "pose " + std::to_string(i) + " is not finite");
    }
    if (!s.q.is_unit()) {
      fail(ErrorKind::invalid_rotation, "pose " + std::to_string(i) +
                                            " orientation is not unit-norm");
    }
    if (i > 0 && !(s.t > trajectory[i - 1].t)) {
      fail(ErrorKind::ordering,
           "trajectory timestamps not strictly increasing at " + std::to_string(i));
    }
  }
}

bool has_gyro(std::span<const ImuSample> stream) {
  return !stream.empty() && stream.front().gyro.has_value();
}

}  // namespace imu_guard

#include "imu_guard/core.hpp"
#include "imu_guard/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace imu_guard {
namespace {

using testing::Rng;
using testing::to_eigen;

constexpr double kPi = std::numbers::pi;

bool throws_kind(ErrorKind kind, auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

TEST(Quaternion, ProductMatchesEigen) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto a = rng.quaternion();
    const auto b = rng.quaternion();
    const auto ours = a * b;
    const auto ref = to_eigen(a) * to_eigen(b);
    EXPECT_NEAR(ours.w(), ref.w(), 1e-15);
    EXPECT_NEAR(ours.x(), ref.x(), 1e-15);
    EXPECT_NEAR(ours.y(), ref.y(), 1e-15);
    EXPECT_NEAR(ours.z(), ref.z(), 1e-15);
  }
}

TEST(Quaternion, RotationMatchesEigenMatrix) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto q = rng.quaternion();
    const Vec3 v = rng.vec3(5.0);
    const Vec3 ref = to_eigen(q).toRotationMatrix() * v;
    EXPECT_LT((q.rotate(v) - ref).norm(), 1e-13);
    EXPECT_LT((q.to_rotation_matrix() - to_eigen(q).toRotationMatrix()).norm(), 1e-14);
  }
}

TEST(Quaternion, NinetyDegreeYawMapsXToY) {
  const auto q = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  EXPECT_LT((q.rotate(Vec3::UnitX()) - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_NEAR(q.yaw(), kPi / 2, 1e-15);
  EXPECT_NEAR(q.angle(), kPi / 2, 1e-15);
}

TEST(Quaternion, EulerZyxIsRzRyRx) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const double yaw = rng.uniform(-3.0, 3.0);
    const double pitch = rng.uniform(-1.4, 1.4);
    const double roll = rng.uniform(-3.0, 3.0);
    const Mat3 ref = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                      Eigen::AngleAxisd(roll, Vec3::UnitX()))
                         .toRotationMatrix();
    const auto q = Quaternion::from_euler_zyx(yaw, pitch, roll);
    EXPECT_LT((q.to_rotation_matrix() - ref).norm(), 1e-14);
    const Vec3 back = euler_zyx(ref);
    EXPECT_NEAR(back[0], yaw, 1e-12);
    EXPECT_NEAR(back[1], pitch, 1e-12);
    EXPECT_NEAR(back[2], roll, 1e-12);
    EXPECT_NEAR(q.yaw(), yaw, 1e-12);
  }
}

TEST(Quaternion, RotationMatrixRoundTrip) {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const auto q = rng.quaternion();
    const auto back = Quaternion::from_rotation_matrix(q.to_rotation_matrix());
    EXPECT_LT((back.to_rotation_matrix() - q.to_rotation_matrix()).norm(), 1e-14);
    EXPECT_TRUE(back.is_unit(1e-14));
  }
}

TEST(Quaternion, RotationVectorMatchesAngleAxis) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Vec3 rv = rng.vec3(1.0);
    const auto ours = Quaternion::from_rotation_vector(rv).to_rotation_matrix();
    const Mat3 ref = Eigen::AngleAxisd(rv.norm(), rv.normalized()).toRotationMatrix();
    EXPECT_LT((ours - ref).norm(), 1e-14);
  }
  EXPECT_EQ(Quaternion::from_rotation_vector(Vec3::Zero()), Quaternion::identity());
}

TEST(Quaternion, NormalizingZeroThrows) {
  EXPECT_TRUE(throws_kind(ErrorKind::invalid_rotation, [] { Quaternion(0, 0, 0, 0).normalized(); }));
}

TEST(Quaternion, SlerpEndpointsAndMidpoint) {
  const auto a = Quaternion::identity();
  const auto b = Quaternion::from_axis_angle(Vec3::UnitZ(), 1.0);
  EXPECT_EQ(slerp(a, b, 0.0), a);
  EXPECT_LT((slerp(a, b, 1.0).to_rotation_matrix() - b.to_rotation_matrix()).norm(), 1e-15);
  EXPECT_NEAR(slerp(a, b, 0.5).angle(), 0.5, 1e-14);
  // Antipodal representation of b must give the same shortest-arc result.
  const Quaternion nb(-b.w(), -b.x(), -b.y(), -b.z());
  EXPECT_NEAR(slerp(a, nb, 0.5).angle(), 0.5, 1e-14);
}

TEST(Measurement, StaticLevelSensorReadsPlusG) {
  ImuNoise noise(NoiseSpec{});
  const auto s = measure(0.0, Vec3::Zero(), Vec3::Zero(), Quaternion::identity(), {}, {}, noise);
  EXPECT_EQ(s.acc, Vec3(0.0, 0.0, 9.81));
  EXPECT_EQ(*s.gyro, Vec3::Zero());
}

TEST(Measurement, RolledSensorSeesGravityOnY) {
  ImuNoise noise(NoiseSpec{});
  // Rolled +90 deg about x: body y points up.
  const auto q = Quaternion::from_axis_angle(Vec3::UnitX(), kPi / 2);
  const auto s = measure(0.0, Vec3::Zero(), Vec3::Zero(), q, {}, {}, noise);
  EXPECT_LT((s.acc - Vec3(0.0, 9.81, 0.0)).norm(), 1e-14);
}

TEST(Measurement, BiasIsAdditive) {
  ImuNoise noise(NoiseSpec{});
  const ImuBias bias{{0.1, -0.2, 0.3}, {0.01, 0.02, 0.03}};
  const auto s = measure(0.0, Vec3::Zero(), Vec3::Zero(), Quaternion::identity(), bias, {}, noise);
  EXPECT_LT((s.acc - Vec3(0.1, -0.2, 10.11)).norm(), 1e-14);
  EXPECT_LT((*s.gyro - bias.gyro).norm(), 1e-15);
}

TEST(Measurement, WorldAccelerationInvertsMeasure) {
  Rng rng(16);
  ImuNoise noise(NoiseSpec{});
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = rng.vec3(3.0);
    const auto q = rng.quaternion();
    const ImuBias bias{rng.vec3(0.2), rng.vec3(0.01)};
    const auto s = measure(0.0, a, Vec3::Zero(), q, bias, {}, noise);
    EXPECT_LT((world_acceleration(s.acc, q, bias, {}) - a).norm(), 1e-13);
  }
}

TEST(Measurement, NonUnitOrientationThrows) {
  ImuNoise noise(NoiseSpec{});
  EXPECT_TRUE(throws_kind(ErrorKind::invalid_rotation, [&] {
    measure(0.0, Vec3::Zero(), Vec3::Zero(), Quaternion(2, 0, 0, 0), {}, {}, noise);
  }));
}

TEST(WorldModel, RejectsUnphysicalGravityUnlessAllowed) {
  WorldModel w{{0.0, 0.0, 1.62}};
  EXPECT_TRUE(throws_kind(ErrorKind::configuration, [&] { w.validate(); }));
  EXPECT_NO_THROW(w.validate(true));
  EXPECT_NO_THROW(WorldModel{}.validate());
}

TEST(Noise, EmpiricalSigmaWithinFivePercent) {
  ImuNoise noise(NoiseSpec{1.0, 0.5, 99});
  Eigen::Array3d sum = Eigen::Array3d::Zero(), sq = Eigen::Array3d::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Vec3 v = noise.acc();
    sum += v.array();
    sq += v.array().square();
  }
  const Eigen::Array3d mean = sum / n;
  const Eigen::Array3d sd = (sq / n - mean.square()).sqrt();
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(sd[a], 1.0, 0.05);
}

TEST(Noise, SameSeedSameDraws) {
  ImuNoise a(NoiseSpec{1.0, 1.0, 5}), b(NoiseSpec{1.0, 1.0, 5});
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(a.acc(), b.acc());
    EXPECT_EQ(a.gyro(), b.gyro());
  }
}

TEST(Stream, ValidationCatchesOrderingAndShape) {
  ImuStream s{{0.0, Vec3::Zero(), Vec3::Zero()}, {0.0, Vec3::Zero(), Vec3::Zero()}};
  EXPECT_TRUE(throws_kind(ErrorKind::ordering, [&] { validate_stream(s); }));
  s[1].t = 0.1;
  s[1].gyro.reset();
  EXPECT_TRUE(throws_kind(ErrorKind::shape, [&] { validate_stream(s); }));
  s[1].gyro = Vec3::Zero();
  s[1].acc[0] = std::nan("");
  EXPECT_TRUE(throws_kind(ErrorKind::parse, [&] { validate_stream(s); }));
}

}  // namespace
}  // namespace imu_guard

#pragma once

#include "imu_guard/core.hpp"
#include "imu_guard/dtw.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace imu_guard::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }

  Vec3 vec3(double scale = 1.0) { return {normal(scale), normal(scale), normal(scale)}; }

  Quaternion quaternion() {
    return Quaternion(normal(), normal(), normal(), normal()).normalized();
  }

  dtw::Series series(std::size_t rows, std::size_t dims, double scale = 1.0) {
    dtw::Series::Matrix m(rows, dims);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(scale);
    return dtw::Series(std::move(m));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline Eigen::Quaterniond to_eigen(const Quaternion& q) {
  return Eigen::Quaterniond(q.w(), q.x(), q.y(), q.z());
}

/// Stream of equally spaced samples with constant readings.
inline ImuStream constant_stream(std::size_t n, double rate, const Vec3& acc,
                                 const Vec3& gyro = Vec3::Zero()) {
  ImuStream out;
  for (std::size_t k = 0; k < n; ++k) out.push_back({static_cast<double>(k) / rate, acc, gyro});
  return out;
}

}  // namespace imu_guard::testing

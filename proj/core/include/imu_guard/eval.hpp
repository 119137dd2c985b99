#pragma once

#include "imu_guard/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imu_guard::eval {

enum class Alignment { se3, sim3, posyaw, none };

std::string_view to_string(Alignment a);
Alignment parse_alignment(std::string_view name);

struct PosePair {
  NavState est;
  NavState ref;
};

struct Association {
  std::vector<PosePair> pairs;
  std::size_t unmatched_est = 0;
  std::size_t unmatched_ref = 0;
};

/// Nearest-timestamp pairing within max_dt; every reference pose is used at
/// most once. Throws ErrorKind::no_overlap when nothing pairs.
Association associate(std::span<const NavState> est, std::span<const NavState> ref,
                      double max_dt);

/// Similarity transform x -> scale * R x + t mapping estimate onto reference.
struct Transform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * rotation * p + translation; }
  NavState apply(const NavState& s) const;
};

/// Closed-form least squares (Umeyama for se3/sim3, planar yaw for posyaw).
Transform align(std::span<const PosePair> pairs, Alignment mode);

double ate_rmse(std::span<const PosePair> pairs, const Transform& transform);

struct RelativeStat {
  double length = 0.0;
  std::size_t samples = 0;
  double translation_mean = 0.0;    ///< m
  double translation_median = 0.0;  ///< m
  double yaw_mean = 0.0;            ///< deg
  double yaw_median = 0.0;          ///< deg
};

struct RelativeErrors {
  std::vector<RelativeStat> stats;
  /// Lengths with no valid sub-trajectory.
  std::vector<double> skipped;
};

inline const std::vector<double> kDefaultLengths{7.0, 14.0, 21.0, 28.0, 35.0};

/// For every start pose and length L, the end pose is the first whose
/// accumulated reference path length exceeds L. The error is
/// inv(ref_rel) * est_rel; translation is its norm and yaw the absolute Z
/// angle of its Z-Y-X decomposition.
RelativeErrors relative_errors(std::span<const PosePair> pairs, std::span<const double> lengths);

struct EvalConfig {
  Alignment alignment = Alignment::se3;
  std::vector<double> lengths = kDefaultLengths;
  /// Association tolerance; defaults to half the median reference spacing.
  std::optional<double> max_dt;
};

struct MetricReport {
  double ate_rmse = 0.0;
  RelativeErrors relative;
  Alignment alignment = Alignment::se3;
  double max_dt = 0.0;
  std::size_t pairs = 0;
  std::size_t unmatched_est = 0;
  std::size_t unmatched_ref = 0;
  Transform transform;
};

MetricReport evaluate(std::span<const NavState> est, std::span<const NavState> ref,
                      const EvalConfig& cfg = {});

std::string report_to_json(const MetricReport& report);
std::string relative_errors_csv(const MetricReport& report);

}  // namespace imu_guard::eval

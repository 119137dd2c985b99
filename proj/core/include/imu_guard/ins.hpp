#pragma once

#include "imu_guard/core.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string_view>

namespace imu_guard::ins {

enum class Method { euler, midpoint };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct IntegratorConfig {
  Method method = Method::midpoint;
  WorldModel world;
  ImuBias bias;
  /// Pose anchoring: every anchor_period seconds position and orientation are
  /// overwritten from anchor_source. Velocity is never touched.
  std::optional<double> anchor_period;
  std::shared_ptr<const Trajectory> anchor_source;
  /// Largest accepted sample spacing. integrate() defaults it to five times
  /// the median spacing of the stream when unset.
  std::optional<double> max_gap;

  void validate() const;
};

/// Propagates `state` (at prev.t) to curr.t.
NavState step(const NavState& state, const ImuSample& prev, const ImuSample& curr,
              const IntegratorConfig& cfg);

/// One output state per input sample; the first is `initial` moved to the
/// first sample time.
Trajectory integrate(const NavState& initial, std::span<const ImuSample> stream,
                     const IntegratorConfig& cfg);

/// Pose at time t by linear/slerp interpolation, clamped to the trajectory
/// ends. Exact stored poses are returned bit-for-bit.
NavState interpolate_pose(std::span<const NavState> trajectory, double t);

/// Pose interpolated at t with velocity from a central difference over one
/// reference spacing. For starting integration from a pose-only reference.
NavState initial_state(std::span<const NavState> reference, double t);

double median_period(std::span<const ImuSample> stream);

}  // namespace imu_guard::ins

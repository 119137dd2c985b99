#include "imu_guard/ins.hpp"

#include "imu_guard/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace imu_guard::ins {

namespace {

Vec3 corrected_gyro(const ImuSample& s, const ImuBias& bias) {
  return s.gyro ? Vec3(*s.gyro - bias.gyro) : Vec3::Zero();
}

// q ⊗ [1, ½ w Δt], renormalized.
Quaternion propagate(const Quaternion& q, const Vec3& w, double dt) {
  const Vec3 h = 0.5 * w * dt;
  return (q * Quaternion(1.0, h.x(), h.y(), h.z())).normalized();
}

bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

}  // namespace

std::string_view to_string(Method m) {
  return m == Method::euler ? "euler" : "midpoint";
}

Method parse_method(std::string_view name) {
  if (name == "euler") return Method::euler;
  if (name == "midpoint") return Method::midpoint;
  fail(ErrorKind::configuration, "unknown integration method '" + std::string(name) + "'");
}

void IntegratorConfig::validate() const {
  if (anchor_source && !(anchor_period && *anchor_period > 0.0)) {
    fail(ErrorKind::configuration, "anchor_period must be > 0 when anchoring");
  }
  if (anchor_period && !anchor_source) {
    fail(ErrorKind::configuration, "anchor_period set without an anchor source");
  }
  if (anchor_source && anchor_source->empty()) {
    fail(ErrorKind::configuration, "anchor source trajectory is empty");
  }
  if (max_gap && !(*max_gap > 0.0)) {
    fail(ErrorKind::configuration, "max_gap must be > 0");
  }
  if (!bias.acc.allFinite() || !bias.gyro.allFinite()) {
    fail(ErrorKind::configuration, "bias must be finite");
  }
}

NavState step(const NavState& state, const ImuSample& prev, const ImuSample& curr,
              const IntegratorConfig& cfg) {
  if (!(curr.t > prev.t)) {
    fail(ErrorKind::ordering, "step: non-increasing timestamps at t=" +
                                  std::to_string(curr.t));
  }
  if (!same_time(state.t, prev.t)) {
    fail(ErrorKind::ordering, "step: state time does not match previous sample");
  }
  const double dt = curr.t - prev.t;
  if (cfg.max_gap && dt > *cfg.max_gap) {
    fail(ErrorKind::gap, "step: gap of " + std::to_string(dt) + " s at t=" +
                             std::to_string(prev.t));
  }
  if (!state.q.is_unit()) {
    fail(ErrorKind::invalid_rotation, "step: state orientation is not unit-norm");
  }

  NavState next;
  next.t = curr.t;
  Vec3 acc_world;
  if (cfg.method == Method::euler) {
    acc_world = world_acceleration(prev.acc, state.q, cfg.bias, cfg.world);
    next.q = propagate(state.q, corrected_gyro(prev, cfg.bias), dt);
  } else {
    // The gyro term averages consecutive corrected samples.
    const Vec3 w = 0.5 * (corrected_gyro(prev, cfg.bias) + corrected_gyro(curr, cfg.bias));
    next.q = propagate(state.q, w, dt);
    acc_world = 0.5 * (world_acceleration(prev.acc, state.q, cfg.bias, cfg.world) +
                       world_acceleration(curr.acc, next.q, cfg.bias, cfg.world));
  }
  next.p = state.p + state.v * dt + 0.5 * acc_world * dt * dt;
  next.v = state.v + acc_world * dt;
  return next;
}

double median_period(std::span<const ImuSample> stream) {
  if (stream.size() < 2) return 0.0;
  std::vector<double> dts;
  dts.reserve(stream.size() - 1);
  for (std::size_t i = 1; i < stream.size(); ++i) dts.push_back(stream[i].t - stream[i - 1].t);
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  return *mid;
}

NavState interpolate_pose(std::span<const NavState> trajectory, double t) {
  if (trajectory.empty()) fail(ErrorKind::empty_input, "interpolate_pose: empty trajectory");
  if (t <= trajectory.front().t) return trajectory.front();
  if (t >= trajectory.back().t) return trajectory.back();
  const auto it = std::lower_bound(
      trajectory.begin(), trajectory.end(), t,
      [](const NavState& s, double value) { return s.t < value; });
  if (same_time(it->t, t)) return *it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (same_time(a.t, t)) return a;
  const double u = (t - a.t) / (b.t - a.t);
  NavState s;
  s.t = t;
  s.p = a.p + u * (b.p - a.p);
  s.v = a.v + u * (b.v - a.v);
  s.q = slerp(a.q, b.q, u);
  return s;
}

NavState initial_state(std::span<const NavState> reference, double t) {
  if (reference.size() < 2) fail(ErrorKind::insufficient_data, "initial_state: need >= 2 poses");
  NavState out = interpolate_pose(reference, t);
  const double h = reference[1].t - reference[0].t;
  const auto ahead = interpolate_pose(reference, t + h);
  const auto behind = interpolate_pose(reference, t - h);
  out.v = (ahead.p - behind.p) / (ahead.t - behind.t);
  out.t = t;
  return out;
}

Trajectory integrate(const NavState& initial, std::span<const ImuSample> stream,
                     const IntegratorConfig& cfg_in) {
  if (stream.empty()) fail(ErrorKind::empty_input, "integrate: empty IMU stream");
  cfg_in.validate();
  validate_stream(stream);
  if (initial.t > stream.front().t && !same_time(initial.t, stream.front().t)) {
    fail(ErrorKind::ordering, "integrate: initial state is after the first sample");
  }

  IntegratorConfig cfg = cfg_in;
  if (!cfg.max_gap && stream.size() >= 2) cfg.max_gap = 5.0 * median_period(stream);

  Trajectory out;
  out.reserve(stream.size());
  NavState state = initial;
  state.t = stream.front().t;
  out.push_back(state);

  const bool anchored = static_cast<bool>(cfg.anchor_source);
  const double anchor_origin = state.t;
  std::size_t next_anchor = 1;

  for (std::size_t k = 1; k < stream.size(); ++k) {
    state = step(state, stream[k - 1], stream[k], cfg);
    if (anchored) {
      bool due = false;
      const double period = *cfg.anchor_period;
      while (state.t + 1e-9 >= anchor_origin + static_cast<double>(next_anchor) * period) {
        due = true;
        ++next_anchor;
      }
      if (due) {
        const NavState pose = interpolate_pose(*cfg.anchor_source, state.t);
        state.p = pose.p;
        state.q = pose.q;
      }
    }
    out.push_back(state);
  }
  return out;
}

}  // namespace imu_guard::ins

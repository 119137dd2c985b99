#include "imu_guard/sim.hpp"

#include "imu_guard/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace imu_guard::sim {

namespace {

struct PathPoint {
  Vec3 p, v, a;
  double yaw, yaw_rate;
  double pitch, pitch_rate;
  double roll, roll_rate;
};

double tangent_yaw_rate(const Vec3& v, const Vec3& a) {
  const double planar = v.x() * v.x() + v.y() * v.y();
  return (v.x() * a.y() - v.y() * a.x()) / planar;
}

PathPoint evaluate(const TrajectorySpec& s, double t) {
  PathPoint pt{};
  const double w = s.angular_rate;
  const double wz = s.z_frequency_ratio * w;
  switch (s.shape) {
    case Shape::line: {
      const Vec3 dir(std::cos(s.heading), std::sin(s.heading), 0.0);
      pt.p = dir * s.speed * t;
      pt.v = dir * s.speed;
      pt.a = Vec3::Zero();
      pt.yaw = s.heading;
      return pt;
    }
    case Shape::ellipse3d: {
      const double c = std::cos(w * t), sn = std::sin(w * t);
      pt.p = {s.radius_x * c, s.radius_y * sn, s.z_amplitude * std::sin(wz * t)};
      pt.v = {-s.radius_x * w * sn, s.radius_y * w * c,
              s.z_amplitude * wz * std::cos(wz * t)};
      pt.a = {-s.radius_x * w * w * c, -s.radius_y * w * w * sn,
              -s.z_amplitude * wz * wz * std::sin(wz * t)};
      break;
    }
    case Shape::figure_eight: {
      pt.p = {s.radius_x * std::sin(w * t), 0.5 * s.radius_y * std::sin(2.0 * w * t),
              s.z_amplitude * std::sin(wz * t)};
      pt.v = {s.radius_x * w * std::cos(w * t), s.radius_y * w * std::cos(2.0 * w * t),
              s.z_amplitude * wz * std::cos(wz * t)};
      pt.a = {-s.radius_x * w * w * std::sin(w * t),
              -2.0 * s.radius_y * w * w * std::sin(2.0 * w * t),
              -s.z_amplitude * wz * wz * std::sin(wz * t)};
      break;
    }
  }
  pt.yaw = std::atan2(pt.v.y(), pt.v.x());
  pt.yaw_rate = tangent_yaw_rate(pt.v, pt.a);
  pt.roll = s.roll_amplitude * std::sin(w * t);
  pt.roll_rate = s.roll_amplitude * w * std::cos(w * t);
  pt.pitch = s.pitch_amplitude * std::sin(wz * t);
  pt.pitch_rate = s.pitch_amplitude * wz * std::cos(wz * t);
  return pt;
}

std::string axes_string(std::uint8_t axes) {
  std::string out;
  if (axes & 1) out += 'x';
  if (axes & 2) out += 'y';
  if (axes & 4) out += 'z';
  return out;
}

}  // namespace

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::ellipse3d: return "ellipse3d";
    case Shape::line: return "line";
    case Shape::figure_eight: return "figure_eight";
  }
  return "unknown";
}

Shape parse_shape(std::string_view name) {
  if (name == "ellipse3d") return Shape::ellipse3d;
  if (name == "line") return Shape::line;
  if (name == "figure_eight") return Shape::figure_eight;
  fail(ErrorKind::configuration, "unknown trajectory shape '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  const double values[] = {radius_x, radius_y, z_amplitude, z_frequency_ratio,
                           roll_amplitude, pitch_amplitude, angular_rate, speed,
                           heading, duration, imu_rate};
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::configuration, "trajectory spec has non-finite values");
  }
  if (!(duration > 0.0)) fail(ErrorKind::configuration, "trajectory duration must be > 0");
  if (pose_count < 2) fail(ErrorKind::configuration, "pose_count must be >= 2");
  if (!(imu_rate > 0.0)) fail(ErrorKind::configuration, "imu_rate must be > 0");
  if (shape == Shape::line) {
    if (!(speed > 0.0)) fail(ErrorKind::configuration, "line speed must be > 0");
  } else {
    if (!(radius_x > 0.0) || !(radius_y > 0.0)) {
      fail(ErrorKind::configuration, "radii must be > 0");
    }
    if (!(angular_rate > 0.0)) fail(ErrorKind::configuration, "angular_rate must be > 0");
  }
}

GroundTruth::GroundTruth(TrajectorySpec spec) : spec_(spec) {
  spec_.validate();
  samples_.reserve(spec_.pose_count);
  const double rate = spec_.pose_rate();
  for (std::size_t i = 0; i < spec_.pose_count; ++i) {
    samples_.push_back(at(static_cast<double>(i) / rate));
  }
}

KinematicState GroundTruth::at(double t) const {
  const PathPoint pt = evaluate(spec_, t);
  KinematicState k;
  k.t = t;
  k.p = pt.p;
  k.v = pt.v;
  k.acc_world = pt.a;
  k.q = Quaternion::from_euler_zyx(pt.yaw, pt.pitch, pt.roll);
  // Body rates of a Z-Y-X Euler sequence.
  const double sphi = std::sin(pt.roll), cphi = std::cos(pt.roll);
  const double sth = std::sin(pt.pitch), cth = std::cos(pt.pitch);
  k.gyro_body = {pt.roll_rate - pt.yaw_rate * sth,
                 pt.pitch_rate * cphi + pt.yaw_rate * cth * sphi,
                 -pt.pitch_rate * sphi + pt.yaw_rate * cth * cphi};
  return k;
}

Trajectory GroundTruth::trajectory() const {
  Trajectory out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.nav());
  return out;
}

GroundTruth generate_truth(const TrajectorySpec& spec) { return GroundTruth(spec); }

ImuStream synthesize_imu(const GroundTruth& truth, const ImuBias& bias,
                         const NoiseSpec& noise, const WorldModel& world, double rate,
                         bool with_gyro) {
  if (!(rate > 0.0)) fail(ErrorKind::configuration, "IMU rate must be > 0");
  const double density = truth.spec().pose_rate();
  if (rate > density * (1.0 + 1e-12)) {
    fail(ErrorKind::resampling, "IMU rate " + std::to_string(rate) +
                                    " Hz exceeds pose density " + std::to_string(density));
  }
  const double t_end = truth.samples().back().t;
  ImuNoise gen(noise);
  ImuStream stream;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / rate;
    if (t > t_end + 1e-12) break;
    const KinematicState state = truth.at(t);
    ImuSample s = measure(t, state.acc_world, state.gyro_body, state.q, bias, world, gen);
    if (!with_gyro) s.gyro.reset();
    stream.push_back(s);
  }
  return stream;
}

void GlitchSpec::validate() const {
  if (!std::isfinite(mu) || !(sigma >= 0.0)) fail(ErrorKind::configuration, "glitch sigma must be >= 0");
  if (!(affected_fraction >= 0.0 && affected_fraction <= 1.0)) {
    fail(ErrorKind::configuration, "affected_fraction must lie in [0, 1]");
  }
  if (burst_len < 1) fail(ErrorKind::configuration, "burst_len must be >= 1");
  if (axes == 0 || axes > 0b111) fail(ErrorKind::configuration, "glitch axes must be a subset of {x,y,z}");
}

GlitchSpec preset(std::string_view name) {
  GlitchSpec g;
  if (name == "n0_1") {
    g.mu = 0.0;
    g.sigma = 1.0;
  } else if (name == "n1_10") {
    g.mu = 1.0;
    g.sigma = 10.0;
  } else if (name == "n50_10") {
    g.mu = 50.0;
    g.sigma = 10.0;
  } else {
    fail(ErrorKind::configuration, "unknown glitch preset '" + std::string(name) + "'");
  }
  return g;
}

GlitchResult inject_glitches(std::span<const ImuSample> stream, const GlitchSpec& spec) {
  spec.validate();
  GlitchResult out;
  out.stream.assign(stream.begin(), stream.end());
  out.mask.assign(stream.size(), false);
  if (spec.affected_fraction == 0.0) return out;

  const double target = spec.affected_fraction * static_cast<double>(stream.size());
  if (target < 1.0) {
    fail(ErrorKind::configuration, "affected_fraction selects less than one sample");
  }
  const auto bursts = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::round(target) /
                                                static_cast<double>(spec.burst_len))));
  if (bursts * spec.burst_len > stream.size()) {
    fail(ErrorKind::configuration, "glitch bursts cannot fit without overlap");
  }

  // Choose burst slots on a compressed line, then re-expand so bursts never overlap.
  std::mt19937_64 rng(spec.seed);
  const std::size_t slots = stream.size() - bursts * (spec.burst_len - 1);
  std::vector<std::size_t> pool(slots);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < bursts; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, slots - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(bursts);
  std::sort(pool.begin(), pool.end());

  std::normal_distribution<double> normal(spec.mu, spec.sigma);
  for (std::size_t b = 0; b < bursts; ++b) {
    const std::size_t start = pool[b] + b * (spec.burst_len - 1);
    out.burst_starts.push_back(start);
    for (std::size_t i = start; i < start + spec.burst_len; ++i) {
      out.mask[i] = true;
      for (int axis = 0; axis < 3; ++axis) {
        if (spec.axes & (1u << axis)) {
          out.stream[i].acc[axis] += spec.sigma > 0.0 ? normal(rng) : spec.mu;
        }
      }
    }
  }
  return out;
}

std::string mask_to_json(const GlitchResult& result, const GlitchSpec& spec) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["length"] = result.mask.size();
  j["mu"] = spec.mu;
  j["sigma"] = spec.sigma;
  j["affected_fraction"] = spec.affected_fraction;
  j["burst_len"] = spec.burst_len;
  j["axes"] = axes_string(spec.axes);
  j["seed"] = spec.seed;
  j["bursts"] = result.burst_starts;
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < result.mask.size(); ++i) {
    if (result.mask[i]) indices.push_back(i);
  }
  j["indices"] = indices;
  return j.dump(2) + "\n";
}

std::vector<bool> mask_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<bool> mask(j.at("length").get<std::size_t>(), false);
    for (auto idx : j.at("indices")) {
      const auto i = idx.get<std::size_t>();
      if (i >= mask.size()) fail(ErrorKind::parse, "mask index out of range");
      mask[i] = true;
    }
    return mask;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("mask JSON: ") + e.what());
  }
}

}  // namespace imu_guard::sim

#include "imu_guard/eval.hpp"

#include "imu_guard/error.hpp"
#include "imu_guard/io.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

namespace imu_guard::eval {

namespace {

struct Pose {
  Mat3 r;
  Vec3 t;
};

Pose pose_of(const NavState& s) { return {s.q.to_rotation_matrix(), s.p}; }

Pose relative(const Pose& a, const Pose& b) {
  return {a.r.transpose() * b.r, a.r.transpose() * (b.t - a.t)};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(Alignment a) {
  switch (a) {
    case Alignment::se3: return "se3";
    case Alignment::sim3: return "sim3";
    case Alignment::posyaw: return "posyaw";
    case Alignment::none: return "none";
  }
  return "unknown";
}

Alignment parse_alignment(std::string_view name) {
  if (name == "se3") return Alignment::se3;
  if (name == "sim3") return Alignment::sim3;
  if (name == "posyaw") return Alignment::posyaw;
  if (name == "none") return Alignment::none;
  fail(ErrorKind::configuration, "unknown alignment '" + std::string(name) + "'");
}

NavState Transform::apply(const NavState& s) const {
  NavState out = s;
  out.p = apply(s.p);
  out.v = scale * rotation * s.v;
  out.q = (Quaternion::from_rotation_matrix(rotation) * s.q).normalized();
  return out;
}

Association associate(std::span<const NavState> est, std::span<const NavState> ref,
                      double max_dt) {
  if (est.empty() || ref.empty()) fail(ErrorKind::empty_input, "associate: empty trajectory");
  if (!(max_dt >= 0.0)) fail(ErrorKind::configuration, "max_dt must be >= 0");
  // Globally greedy: closest candidate pairs are accepted first.
  struct Candidate {
    double dt;
    std::size_t e;
    std::size_t r;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est[i].t;
    auto it = std::lower_bound(ref.begin(), ref.end(), t - max_dt,
                               [](const NavState& s, double v) { return s.t < v; });
    for (; it != ref.end() && it->t <= t + max_dt; ++it) {
      const double dt = std::abs(it->t - t);
      if (dt <= max_dt) candidates.push_back({dt, i, static_cast<std::size_t>(it - ref.begin())});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.e, a.r) < std::tie(b.dt, b.e, b.r);
  });
  std::vector<bool> used(ref.size(), false);
  std::vector<std::size_t> match(est.size(), ref.size());
  for (const auto& c : candidates) {
    if (used[c.r] || match[c.e] != ref.size()) continue;
    used[c.r] = true;
    match[c.e] = c.r;
  }
  Association out;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (match[i] == ref.size()) {
      ++out.unmatched_est;
    } else {
      out.pairs.push_back({est[i], ref[match[i]]});
    }
  }
  out.unmatched_ref = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  if (out.pairs.empty()) fail(ErrorKind::no_overlap, "associate: no poses within max_dt");
  return out;
}

Transform align(std::span<const PosePair> pairs, Alignment mode) {
  if (pairs.empty()) fail(ErrorKind::empty_input, "align: no pairs");
  Transform tf;
  if (mode == Alignment::none) return tf;

  const double n = static_cast<double>(pairs.size());
  Vec3 mu_est = Vec3::Zero(), mu_ref = Vec3::Zero();
  for (const auto& p : pairs) {
    mu_est += p.est.p;
    mu_ref += p.ref.p;
  }
  mu_est /= n;
  mu_ref /= n;

  if (mode == Alignment::posyaw) {
    double s_cos = 0.0, s_sin = 0.0;
    for (const auto& p : pairs) {
      const Vec3 a = p.est.p - mu_est, b = p.ref.p - mu_ref;
      s_cos += a.x() * b.x() + a.y() * b.y();
      s_sin += a.x() * b.y() - a.y() * b.x();
    }
    if (std::hypot(s_cos, s_sin) < 1e-12) {
      fail(ErrorKind::rank_deficiency, "posyaw alignment: planar spread is degenerate");
    }
    const double yaw = std::atan2(s_sin, s_cos);
    tf.rotation = Quaternion::from_axis_angle(Vec3::UnitZ(), yaw).to_rotation_matrix();
    tf.translation = mu_ref - tf.rotation * mu_est;
    return tf;
  }

  if (pairs.size() < 3) fail(ErrorKind::rank_deficiency, "alignment needs >= 3 pairs");
  Mat3 cov = Mat3::Zero();
  double var_est = 0.0;
  for (const auto& p : pairs) {
    const Vec3 a = p.est.p - mu_est, b = p.ref.p - mu_ref;
    cov += b * a.transpose();
    var_est += a.squaredNorm();
  }
  cov /= n;
  var_est /= n;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-10 * sv[0]) {
    fail(ErrorKind::rank_deficiency, "alignment: positions are collinear or coincident");
  }
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
  tf.rotation = svd.matrixU() * s * svd.matrixV().transpose();
  if (mode == Alignment::sim3) tf.scale = (sv.asDiagonal() * s).trace() / var_est;
  tf.translation = mu_ref - tf.scale * tf.rotation * mu_est;
  return tf;
}

double ate_rmse(std::span<const PosePair> pairs, const Transform& transform) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) sum += (transform.apply(p.est.p) - p.ref.p).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

RelativeErrors relative_errors(std::span<const PosePair> pairs, std::span<const double> lengths) {
  RelativeErrors out;
  const std::size_t n = pairs.size();
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    dist[i] = dist[i - 1] + (pairs[i].ref.p - pairs[i - 1].ref.p).norm();
  }
  std::vector<Pose> ref(n), est(n);
  for (std::size_t i = 0; i < n; ++i) {
    ref[i] = pose_of(pairs[i].ref);
    est[i] = pose_of(pairs[i].est);
  }

  std::vector<double> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  for (double length : sorted) {
    if (!(length > 0.0)) fail(ErrorKind::configuration, "sub-trajectory lengths must be > 0");
    std::vector<double> trans, yaw;
    std::size_t end = 0;
    for (std::size_t start = 0; start < n; ++start) {
      end = std::max(end, start + 1);
      while (end < n && !(dist[end] - dist[start] > length)) ++end;
      if (end >= n) break;
      const Pose ref_rel = relative(ref[start], ref[end]);
      const Pose est_rel = relative(est[start], est[end]);
      const Pose err = relative(ref_rel, est_rel);
      trans.push_back(err.t.norm());
      yaw.push_back(std::abs(euler_zyx(err.r)[0]) * 180.0 / std::numbers::pi);
    }
    if (trans.empty()) {
      out.skipped.push_back(length);
      continue;
    }
    out.stats.push_back(
        {length, trans.size(), mean(trans), median(trans), mean(yaw), median(yaw)});
  }
  return out;
}

MetricReport evaluate(std::span<const NavState> est, std::span<const NavState> ref,
                      const EvalConfig& cfg) {
  if (est.empty() || ref.empty()) fail(ErrorKind::empty_input, "evaluate: empty trajectory");
  double max_dt = 0.0;
  if (cfg.max_dt) {
    max_dt = *cfg.max_dt;
  } else if (ref.size() >= 2) {
    std::vector<double> dts;
    for (std::size_t i = 1; i < ref.size(); ++i) dts.push_back(ref[i].t - ref[i - 1].t);
    max_dt = 0.5 * median(dts);
  }
  const auto assoc = associate(est, ref, max_dt);

  MetricReport report;
  report.alignment = cfg.alignment;
  report.max_dt = max_dt;
  report.pairs = assoc.pairs.size();
  report.unmatched_est = assoc.unmatched_est;
  report.unmatched_ref = assoc.unmatched_ref;
  report.transform = align(assoc.pairs, cfg.alignment);
  report.ate_rmse = ate_rmse(assoc.pairs, report.transform);

  std::vector<PosePair> aligned = assoc.pairs;
  for (auto& p : aligned) p.est = report.transform.apply(p.est);
  report.relative = relative_errors(aligned, cfg.lengths);
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["ate_rmse"] = report.ate_rmse;
  j["alignment"] = to_string(report.alignment);
  j["association_max_dt"] = report.max_dt;
  j["pairs"] = report.pairs;
  j["unmatched_est"] = report.unmatched_est;
  j["unmatched_ref"] = report.unmatched_ref;
  j["scale"] = report.transform.scale;
  j["relative_statistic"] = "mean over start poses (median also reported)";
  nlohmann::ordered_json rel = nlohmann::ordered_json::array();
  for (const auto& s : report.relative.stats) {
    rel.push_back({{"length", s.length},
                   {"samples", s.samples},
                   {"translation_mean", s.translation_mean},
                   {"translation_median", s.translation_median},
                   {"yaw_mean_deg", s.yaw_mean},
                   {"yaw_median_deg", s.yaw_median}});
  }
  j["relative"] = std::move(rel);
  j["skipped_lengths"] = report.relative.skipped;
  return j.dump(2) + "\n";
}

std::string relative_errors_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "length,samples,translation_mean,translation_median,yaw_mean_deg,yaw_median_deg\n";
  for (const auto& s : report.relative.stats) {
    out << io::format_double(s.length) << ',' << s.samples << ','
        << io::format_double(s.translation_mean) << ','
        << io::format_double(s.translation_median) << ',' << io::format_double(s.yaw_mean)
        << ',' << io::format_double(s.yaw_median) << '\n';
  }
  return out.str();
}

}  // namespace imu_guard::eval

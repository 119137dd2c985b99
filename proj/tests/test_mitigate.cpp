#include "imu_guard/detect.hpp"
#include "imu_guard/error.hpp"
#include "imu_guard/mitigate.hpp"
#include "imu_guard/sim.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <memory>

namespace imu_guard {
namespace {

using testing::constant_stream;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorKind::io;
}

detect::DetectionReport threshold_report(std::span<const ImuSample> s, double thr) {
  detect::DetectorConfig c;
  c.mode = detect::Mode::threshold;
  c.acc_threshold = thr;
  return detect::detect_threshold(s, c);
}

TEST(Clamp, NoFlagsIsIdentity) {
  testing::Rng rng(61);
  ImuStream s;
  for (int i = 0; i < 50; ++i) s.push_back({i * 0.01, Vec3(0, 0, 9.81) + rng.vec3(0.1), rng.vec3()});
  for (auto mode : {mitigate::Mode::clamp, mitigate::Mode::moving_average}) {
    const auto out = mitigate::mitigate_threshold(s, threshold_report(s, 12.0), {mode, 5});
    EXPECT_TRUE(out.log.empty());
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(out.stream[i].acc, s[i].acc);
      EXPECT_EQ(*out.stream[i].gyro, *s[i].gyro);
    }
  }
}

TEST(Clamp, SignedClampToReferencePlusThreshold) {
  auto s = constant_stream(10, 100.0, {0.0, 0.0, 9.81});
  s[3].acc.x() = 50.0;
  s[6].acc.x() = -50.0;
  s[8].acc.z() = 9.81 - 30.0;
  const auto out = mitigate::mitigate_threshold(s, threshold_report(s, 20.0), {mitigate::Mode::clamp, 5});
  EXPECT_EQ(out.stream[3].acc.x(), 20.0);
  EXPECT_EQ(out.stream[6].acc.x(), -20.0);
  EXPECT_NEAR(out.stream[8].acc.z(), 9.81 - 20.0, 1e-14);
  EXPECT_EQ(out.log.size(), 3u);
  EXPECT_EQ(out.log[0].rule, "clamp");
  EXPECT_EQ(*out.log[0].old_value, 50.0);
  // Clamped values must not re-trigger detection.
  EXPECT_TRUE(threshold_report(out.stream, 20.0).records.empty());
}

TEST(MovingAverage, MeanOfPreviousUnflaggedValues) {
  const std::vector<double> prior{0.1, -0.2, 0.0, 0.1, 0.0};
  ImuStream s;
  for (std::size_t i = 0; i < prior.size(); ++i) s.push_back({i * 0.01, {prior[i], 0.0, 9.81}, std::nullopt});
  s.push_back({0.05, {50.0, 0.0, 9.81}, std::nullopt});
  const auto out = mitigate::mitigate_threshold(s, threshold_report(s, 20.0), {mitigate::Mode::moving_average, 5});
  EXPECT_NEAR(out.stream[5].acc.x(), 0.0, 1e-17);
  EXPECT_EQ(out.log.at(0).rule, "moving_average");
}

TEST(MovingAverage, SkipsFlaggedPredecessors) {
  auto s = constant_stream(8, 100.0, {1.0, 0.0, 9.81});
  s[0].acc.x() = 3.0;
  s[6].acc.x() = 40.0;
  s[7].acc.x() = 40.0;
  const auto out = mitigate::mitigate_threshold(s, threshold_report(s, 12.0), {mitigate::Mode::moving_average, 6});
  // Window for index 7 is indices 0..5 (index 6 is flagged): (3 + 5) / 6.
  EXPECT_DOUBLE_EQ(out.stream[7].acc.x(), 8.0 / 6.0);
  EXPECT_DOUBLE_EQ(out.stream[6].acc.x(), 8.0 / 6.0);
}

TEST(MovingAverage, FallsBackToClampWithoutHistory) {
  auto s = constant_stream(4, 100.0, {0.0, 0.0, 9.81});
  s[0].acc.y() = 30.0;
  const auto out = mitigate::mitigate_threshold(s, threshold_report(s, 12.0), {mitigate::Mode::moving_average, 5});
  EXPECT_EQ(out.stream[0].acc.y(), 12.0);
  EXPECT_EQ(out.log.at(0).rule, "clamp_fallback");
}

TEST(Threshold, TimestampsPreservedAndMismatchRejected) {
  auto s = constant_stream(100, 100.0, {0.0, 0.0, 9.81});
  s[10].acc.z() += 60;
  const auto report = threshold_report(s, 12.0);
  const auto out = mitigate::mitigate_threshold(s, report, {});
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(out.stream[i].t, s[i].t);
  s.pop_back();
  EXPECT_EQ(kind_of([&] { mitigate::mitigate_threshold(s, report, {}); }), ErrorKind::corrupted_report);
}

TEST(Resample, KnotsAreExactAndInteriorIsLinear) {
  const dtw::Series t{{0.0, 1.0}, {2.0, 1.0}, {4.0, -1.0}};
  const auto same = mitigate::resample_rows(t, 3);
  EXPECT_EQ(same.data(), t.data());
  const auto up = mitigate::resample_rows(t, 5);
  EXPECT_EQ(up.data()(0, 0), 0.0);
  EXPECT_EQ(up.data()(2, 0), 2.0);
  EXPECT_EQ(up.data()(4, 1), -1.0);
  EXPECT_DOUBLE_EQ(up.data()(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(up.data()(3, 1), 0.0);
}

TEST(Resample, TenToFortyLiesOnInterpolant) {
  testing::Rng rng(62);
  const auto t = rng.series(10, 3);
  const auto r = mitigate::resample_rows(t, 40);
  for (std::size_t j = 0; j < 40; ++j) {
    const double u = static_cast<double>(j) * 9.0 / 39.0;
    const auto lo = static_cast<Eigen::Index>(std::floor(u));
    const auto hi = std::min<Eigen::Index>(lo + 1, 9);
    const double f = u - static_cast<double>(lo);
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double expected = (1 - f) * t.data()(lo, c) + f * t.data()(hi, c);
      EXPECT_NEAR(r.data()(static_cast<Eigen::Index>(j), c), expected, 1e-14);
    }
  }
  // Knots of the template land on rows 13 j / 3 whenever that is integral.
  for (Eigen::Index k : {0, 3, 6, 9}) EXPECT_EQ(r.data()(13 * k / 3, 0), t.data()(k, 0));
}

struct DtwCase {
  std::shared_ptr<const detect::TemplateLibrary> lib;
  ImuStream stream;
  detect::DetectionReport report;
  double threshold = 0.0;
};

DtwCase dtw_case(std::size_t template_len) {
  const auto truth = sim::generate_truth({});
  std::vector<detect::Recording> recs;
  for (std::uint64_t i = 0; i < 2; ++i) {
    recs.push_back({"e", "r", sim::synthesize_imu(truth, {}, {0.1, 0.01, 300 + i}, {}, 200.0)});
  }
  DtwCase c;
  c.lib = std::make_shared<const detect::TemplateLibrary>(
      detect::extract_templates(recs, template_len, 10, {}, 1));
  auto g = sim::preset("n50_10");
  g.seed = 3;
  c.stream = sim::inject_glitches(sim::synthesize_imu(truth, {}, {0.1, 0.01, 5}, {}, 200.0), g).stream;
  std::vector<ImuStream> val;
  for (std::uint64_t i = 0; i < 3; ++i) val.push_back(sim::synthesize_imu(truth, {}, {0.1, 0.01, 400 + i}, {}, 200.0));
  c.threshold = detect::calibrate_dtw_threshold(*c.lib, detect::validation_slices(val, 40, c.lib->layout), 0.99);
  detect::DetectorConfig cfg;
  cfg.templates = c.lib;
  cfg.dtw_threshold = c.threshold;
  c.report = detect::detect(c.stream, cfg);
  return c;
}

TEST(Substitution, SliceEqualsTemplateWhenLengthsMatch) {
  const auto c = dtw_case(40);
  const auto out = mitigate::mitigate_dtw(c.stream, c.report, *c.lib, {mitigate::Mode::template_substitution, 5});
  std::size_t abnormal = 0;
  for (const auto& r : c.report.records) {
    if (r.verdict == detect::Verdict::abnormal) {
      ++abnormal;
      const auto* t = c.lib->find(*r.template_id);
      for (std::size_t k = 0; k < r.length; ++k) {
        EXPECT_EQ(out.stream[r.start_index + k].acc, Vec3(t->rows.row(k)[0], t->rows.row(k)[1], t->rows.row(k)[2]));
        EXPECT_EQ(out.stream[r.start_index + k].gyro->x(), t->rows.row(k)[3]);
      }
    } else {
      for (std::size_t k = 0; k < r.length; ++k) {
        EXPECT_EQ(out.stream[r.start_index + k].acc, c.stream[r.start_index + k].acc);
      }
    }
  }
  EXPECT_GT(abnormal, 0u);
  EXPECT_EQ(out.log.size(), abnormal);
}

TEST(Substitution, StaysInsideLibraryEnvelopeAndKeepsTime) {
  const auto c = dtw_case(10);
  const auto out = mitigate::mitigate_dtw(c.stream, c.report, *c.lib, {mitigate::Mode::template_substitution, 5});
  Eigen::RowVectorXd lo = Eigen::RowVectorXd::Constant(6, 1e300), hi = -lo;
  for (const auto& t : c.lib->templates) {
    lo = lo.cwiseMin(t.rows.data().colwise().minCoeff());
    hi = hi.cwiseMax(t.rows.data().colwise().maxCoeff());
  }
  for (const auto& r : c.report.records) {
    if (r.verdict != detect::Verdict::abnormal) continue;
    for (std::size_t k = r.start_index; k < r.start_index + r.length; ++k) {
      for (int a = 0; a < 3; ++a) {
        EXPECT_GE(out.stream[k].acc[a], lo[a]);
        EXPECT_LE(out.stream[k].acc[a], hi[a]);
      }
    }
  }
  for (std::size_t i = 0; i < c.stream.size(); ++i) EXPECT_EQ(out.stream[i].t, c.stream[i].t);
}

TEST(Substitution, IdempotentAfterRedetection) {
  const auto c = dtw_case(10);
  const mitigate::MitigationConfig mcfg{mitigate::Mode::template_substitution, 5};
  const auto once = mitigate::mitigate_dtw(c.stream, c.report, *c.lib, mcfg);
  detect::DetectorConfig cfg;
  cfg.templates = c.lib;
  cfg.dtw_threshold = c.threshold;
  const auto again = mitigate::mitigate_dtw(once.stream, detect::detect(once.stream, cfg), *c.lib, mcfg);
  EXPECT_TRUE(again.log.empty());
}

TEST(Substitution, UnknownTemplateIsCorruptedReport) {
  auto c = dtw_case(10);
  for (auto& r : c.report.records) {
    if (r.verdict == detect::Verdict::abnormal) {
      r.template_id = "missing";
      break;
    }
  }
  const mitigate::MitigationConfig mcfg{mitigate::Mode::template_substitution, 5};
  EXPECT_EQ(kind_of([&] { mitigate::mitigate_dtw(c.stream, c.report, *c.lib, mcfg); }),
            ErrorKind::corrupted_report);
}

}  // namespace
}  // namespace imu_guard

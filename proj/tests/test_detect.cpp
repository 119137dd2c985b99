#include "imu_guard/detect.hpp"
#include "imu_guard/error.hpp"
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

detect::DetectorConfig threshold_cfg(double thr) {
  detect::DetectorConfig c;
  c.mode = detect::Mode::threshold;
  c.acc_threshold = thr;
  return c;
}

std::vector<detect::Recording> clean_recordings(std::size_t n, std::uint64_t seed0) {
  const auto truth = sim::generate_truth({});
  std::vector<detect::Recording> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"ellipse3d", "rec" + std::to_string(i),
                   sim::synthesize_imu(truth, {}, {0.1, 0.01, seed0 + i}, {}, 200.0)});
  }
  return out;
}

TEST(Slicing, FloorSlicesAndResidual) {
  const auto s = constant_stream(95, 100.0, Vec3::Zero());
  const auto sliced = detect::slice_stream(s, 40);
  ASSERT_EQ(sliced.slices.size(), 2u);
  EXPECT_EQ(sliced.slices[1].start_index, 40u);
  EXPECT_EQ(sliced.slices[1].samples.size(), 40u);
  EXPECT_EQ(sliced.residual_start, 80u);
  EXPECT_EQ(sliced.residual_length, 15u);
  EXPECT_EQ(kind_of([&] { detect::slice_stream(s, 0); }), ErrorKind::configuration);
}

TEST(Layout, SixDimsWeightsGyro) {
  const ImuStream s{{0.0, {1, 2, 3}, Vec3(4, 5, 6)}};
  const auto six = detect::to_series(s, {6, 2.0, false});
  EXPECT_EQ(six.data()(0, 5), 12.0);
  EXPECT_EQ(six.data()(0, 0), 1.0);
  const auto three = detect::to_series(s, {3, 2.0, false});
  EXPECT_EQ(three.dims(), 3u);
  const ImuStream acc_only{{0.0, {1, 2, 3}, std::nullopt}};
  EXPECT_EQ(kind_of([&] { detect::to_series(acc_only, {6, 1.0, false}); }), ErrorKind::shape);
}

TEST(Threshold, StaticReferenceIsLevelGravity) {
  EXPECT_EQ(detect::static_reference({}), Vec3(0.0, 0.0, 9.81));
}

TEST(Threshold, FlagsExactlyTheSamplesBeyondThreshold) {
  testing::Rng rng(51);
  auto s = constant_stream(500, 200.0, {0.0, 0.0, 9.81});
  std::vector<std::pair<std::size_t, std::uint8_t>> expected;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::uint8_t axes = 0;
    for (int a = 0; a < 3; ++a) {
      if (rng.uniform(0, 1) < 0.05) {
        const double dev = rng.uniform(-30, 30);
        s[i].acc[a] += dev;
        if (std::abs(dev) > 12.0) axes |= static_cast<std::uint8_t>(1u << a);
      }
    }
    if (axes) expected.emplace_back(i, axes);
  }
  const auto report = detect::detect_threshold(s, threshold_cfg(12.0));
  std::vector<std::pair<std::size_t, std::uint8_t>> got;
  for (const auto& r : report.records) {
    EXPECT_EQ(r.verdict, detect::Verdict::abnormal);
    EXPECT_EQ(r.length, r.flagged.size());
    for (const auto& f : r.flagged) got.emplace_back(f.index, f.axes);
  }
  EXPECT_EQ(got, expected);
}

TEST(Threshold, OneRecordPerConsecutiveRun) {
  auto s = constant_stream(20, 200.0, {0.0, 0.0, 9.81});
  for (std::size_t i : {3, 4, 5, 9}) s[i].acc.z() += 50.0;
  const auto report = detect::detect_threshold(s, threshold_cfg(12.0));
  ASSERT_EQ(report.records.size(), 2u);
  EXPECT_EQ(report.records[0].start_index, 3u);
  EXPECT_EQ(report.records[0].length, 3u);
  EXPECT_EQ(report.records[1].start_index, 9u);
  EXPECT_EQ(report.records[1].flagged[0].axes, 0b100);
}

TEST(Threshold, ExactlyAtThresholdIsNotFlagged) {
  auto s = constant_stream(3, 200.0, {12.0, 0.0, 9.81});
  EXPECT_TRUE(detect::detect_threshold(s, threshold_cfg(12.0)).records.empty());
}

TEST(Templates, ExtractionIsDeterministicAndShaped) {
  const auto recs = clean_recordings(2, 10);
  const auto a = detect::extract_templates(recs, 10, 6, {{6, 1.0, false}, std::nullopt}, 1);
  const auto b = detect::extract_templates(recs, 10, 6, {{6, 1.0, false}, std::nullopt}, 4);
  ASSERT_EQ(a.templates.size(), 6u);
  for (std::size_t i = 0; i < a.templates.size(); ++i) {
    EXPECT_EQ(a.templates[i].id, b.templates[i].id);
    EXPECT_EQ(a.templates[i].rows.data(), b.templates[i].rows.data());
    EXPECT_EQ(a.templates[i].rows.length(), 10u);
    EXPECT_EQ(a.templates[i].offset % 10, 0u);
  }
  EXPECT_EQ(a.templates[0].id, "ellipse3d_0");
}

TEST(Templates, TemplatesAreVerbatimWindows) {
  const auto recs = clean_recordings(1, 20);
  const auto lib = detect::extract_templates(recs, 8, 4, {{3, 1.0, false}, 4}, 1);
  for (const auto& t : lib.templates) {
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(t.rows.data()(r, c), recs[0].stream[t.offset + r].acc[c]);
      }
    }
  }
}

TEST(Templates, QuotaSplitsAcrossLabels) {
  auto recs = clean_recordings(3, 30);
  recs[2].label = "other";
  const auto lib = detect::extract_templates(recs, 10, 10, {}, 1);
  std::size_t other = 0;
  for (const auto& t : lib.templates) other += t.label == "other";
  // 200 of 600 windows carry "other": 1 + floor(8/3) = 3, plus the larger remainder (2/3).
  EXPECT_EQ(other, 4u);
  EXPECT_EQ(lib.templates.size(), 10u);
}

TEST(Templates, InsufficientDataAndTooFewTemplates) {
  const std::vector<detect::Recording> tiny{{"a", "s", constant_stream(50, 200, Vec3::Zero())}};
  EXPECT_EQ(kind_of([&] { detect::extract_templates(tiny, 10, 10, {}, 1); }),
            ErrorKind::insufficient_data);
  auto recs = clean_recordings(2, 40);
  recs[1].label = "b";
  EXPECT_EQ(kind_of([&] { detect::extract_templates(recs, 10, 1, {}, 1); }),
            ErrorKind::configuration);
}

TEST(Templates, JsonRoundTrip) {
  const auto lib = detect::extract_templates(clean_recordings(1, 50), 10, 3, {}, 1);
  const auto back = detect::library_from_json(detect::library_to_json(lib));
  ASSERT_EQ(back.templates.size(), 3u);
  EXPECT_EQ(back.layout.dims, 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.templates[i].rows.data(), lib.templates[i].rows.data());
    EXPECT_EQ(back.templates[i].offset, lib.templates[i].offset);
  }
  EXPECT_EQ(kind_of([] { detect::library_from_json("{\"version\": 1}"); }), ErrorKind::parse);
}

TEST(Calibration, NearestRankQuantileTimesMargin) {
  detect::TemplateLibrary lib;
  lib.layout = {3, 1.0, false};
  lib.length = 1;
  lib.templates.push_back({"t0", "x", dtw::Series{{0.0, 0.0, 0.0}}, "", 0});
  std::vector<dtw::Series> validation;
  // Distances to the single zero template: k^2 for k = 1..10 (one row each).
  for (int k = 1; k <= 10; ++k) validation.push_back(dtw::Series{{double(k), 0.0, 0.0}});
  EXPECT_DOUBLE_EQ(detect::calibrate_dtw_threshold(lib, validation, 0.9, 1.0), 81.0);
  EXPECT_DOUBLE_EQ(detect::calibrate_dtw_threshold(lib, validation, 0.95, 1.2), 120.0);
  EXPECT_DOUBLE_EQ(detect::calibrate_dtw_threshold(lib, validation, 0.05, 1.0), 1.0);
  EXPECT_EQ(kind_of([&] { detect::calibrate_dtw_threshold(lib, {}, 0.9); }), ErrorKind::insufficient_data);
}

struct DtwFixture {
  std::shared_ptr<const detect::TemplateLibrary> lib;
  double threshold;
};

DtwFixture make_dtw_fixture() {
  const auto lib = std::make_shared<const detect::TemplateLibrary>(
      detect::extract_templates(clean_recordings(3, 100), 10, 10, {}, 1));
  std::vector<ImuStream> val;
  for (auto& r : clean_recordings(3, 200)) val.push_back(std::move(r.stream));
  const auto slices = detect::validation_slices(val, 40, lib->layout);
  return {lib, detect::calibrate_dtw_threshold(*lib, slices, 0.99, 1.2, 1)};
}

TEST(DtwDetect, FlagsInjectedBurstsOnHeldOutStream) {
  const auto fx = make_dtw_fixture();
  const auto truth = sim::generate_truth({});
  const auto clean = sim::synthesize_imu(truth, {}, {0.1, 0.01, 7}, {}, 200.0);
  auto g = sim::preset("n50_10");
  g.seed = 8;
  const auto glitched = sim::inject_glitches(clean, g);
  detect::DetectorConfig cfg;
  cfg.dtw_threshold = fx.threshold;
  cfg.templates = fx.lib;
  const auto report = detect::detect(glitched.stream, cfg);
  EXPECT_EQ(report.records.size(), 50u);
  const auto score = detect::score_slices(report, glitched.mask);
  EXPECT_EQ(score.true_positive + score.false_negative, 4u);
  EXPECT_GE(score.recall(), 0.9);
  EXPECT_LE(score.false_positive_rate(), 0.05);
  for (const auto& r : report.records) {
    if (r.verdict == detect::Verdict::unprocessed) continue;
    ASSERT_TRUE(r.template_id.has_value());
    EXPECT_NE(fx.lib->find(*r.template_id), nullptr);
  }
}

TEST(DtwDetect, ResidualIsReportedUnprocessed) {
  const auto fx = make_dtw_fixture();
  auto stream = sim::synthesize_imu(sim::generate_truth({}), {}, {0.1, 0.01, 9}, {}, 200.0);
  stream.resize(1990);
  detect::DetectorConfig cfg;
  cfg.dtw_threshold = fx.threshold;
  cfg.templates = fx.lib;
  const auto report = detect::detect(stream, cfg);
  ASSERT_EQ(report.records.size(), 50u);
  EXPECT_EQ(report.records.back().verdict, detect::Verdict::unprocessed);
  EXPECT_EQ(report.records.back().start_index, 1960u);
  EXPECT_EQ(report.records.back().length, 30u);
  EXPECT_FALSE(report.records.back().best_distance.has_value());
}

TEST(DtwDetect, ParallelismDoesNotChangeReport) {
  const auto fx = make_dtw_fixture();
  const auto stream = sim::synthesize_imu(sim::generate_truth({}), {}, {0.1, 0.01, 9}, {}, 200.0);
  detect::DetectorConfig cfg;
  cfg.dtw_threshold = fx.threshold;
  cfg.templates = fx.lib;
  cfg.parallelism = 1;
  const auto a = detect::detect(stream, cfg);
  cfg.parallelism = 4;
  EXPECT_EQ(detect::detect(stream, cfg), a);
}

TEST(Report, JsonlRoundTrip) {
  auto s = constant_stream(30, 200.0, {0.0, 0.0, 9.81});
  s[4].acc.x() -= 40.0;
  s[5].acc.z() += 40.0;
  s[5].acc.y() += 40.0;
  const auto report = detect::detect_threshold(s, threshold_cfg(12.0));
  const auto text = detect::report_to_jsonl(report);
  EXPECT_NE(text.find("\"yz\""), std::string::npos);
  EXPECT_EQ(detect::report_from_jsonl(text), report);
  EXPECT_EQ(kind_of([] { detect::report_from_jsonl("not json\n"); }), ErrorKind::parse);
}

TEST(Scoring, CountsSlices) {
  detect::DetectionReport r;
  r.mode = detect::Mode::dtw;
  r.stream_length = 12;
  r.slice_len = 4;
  r.records = {{0, 4, detect::Verdict::abnormal, 1.0, "a", {}},
               {4, 4, detect::Verdict::normal, 0.1, "a", {}},
               {8, 4, detect::Verdict::abnormal, 1.0, "a", {}}};
  std::vector<bool> mask(12, false);
  mask[1] = mask[5] = true;
  const auto s = detect::score_slices(r, mask);
  EXPECT_EQ(s.true_positive, 1u);
  EXPECT_EQ(s.false_negative, 1u);
  EXPECT_EQ(s.false_positive, 1u);
  EXPECT_EQ(s.true_negative, 0u);
  EXPECT_DOUBLE_EQ(s.recall(), 0.5);
  EXPECT_DOUBLE_EQ(s.false_positive_rate(), 1.0);
}

}  // namespace
}  // namespace imu_guard

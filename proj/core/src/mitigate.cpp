#include "imu_guard/mitigate.hpp"

#include "imu_guard/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace imu_guard::mitigate {

namespace {

// reference +/- threshold, pulled inward until the deviation no longer
// exceeds the threshold after rounding.
double clamp_value(double value, double reference, double threshold) {
  const double sign = value >= reference ? 1.0 : -1.0;
  double out = reference + sign * threshold;
  while (std::abs(out - reference) > threshold) out = std::nextafter(out, reference);
  return out;
}

void check_stream(std::span<const ImuSample> stream, const detect::DetectionReport& report) {
  if (report.stream_length != stream.size()) {
    fail(ErrorKind::corrupted_report, "report covers " + std::to_string(report.stream_length) +
                                          " samples, stream has " + std::to_string(stream.size()));
  }
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::clamp: return "clamp";
    case Mode::moving_average: return "moving_average";
    case Mode::template_substitution: return "template_substitution";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  if (name == "clamp") return Mode::clamp;
  if (name == "moving_average") return Mode::moving_average;
  if (name == "template_substitution") return Mode::template_substitution;
  fail(ErrorKind::configuration, "unknown mitigation mode '" + std::string(name) + "'");
}

void MitigationConfig::validate() const {
  if (window_n < 1) fail(ErrorKind::configuration, "window_n must be >= 1");
}

MitigationResult mitigate_threshold(std::span<const ImuSample> stream,
                                    const detect::DetectionReport& report,
                                    const MitigationConfig& cfg) {
  cfg.validate();
  if (report.mode != detect::Mode::threshold) {
    fail(ErrorKind::configuration, "threshold mitigation needs a threshold report");
  }
  if (cfg.mode == Mode::template_substitution) {
    fail(ErrorKind::configuration, "template substitution needs dtw detection");
  }
  check_stream(stream, report);

  std::vector<std::uint8_t> flags(stream.size(), 0);
  for (const auto& r : report.records) {
    for (const auto& f : r.flagged) {
      if (f.index >= stream.size()) fail(ErrorKind::corrupted_report, "flag index out of range");
      flags[f.index] |= f.axes;
    }
  }

  MitigationResult out;
  out.stream.assign(stream.begin(), stream.end());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (flags[i] == 0) continue;
    for (int a = 0; a < 3; ++a) {
      if (!(flags[i] & (1u << a))) continue;
      const double old_value = stream[i].acc[a];
      const double ref = report.reference[a];
      LogEntry entry;
      entry.start_index = i;
      entry.axis = a;
      entry.old_value = old_value;
      double value = 0.0;
      if (cfg.mode == Mode::moving_average) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t j = i; j-- > 0 && used < cfg.window_n;) {
          if (!(flags[j] & (1u << a))) {
            sum += stream[j].acc[a];
            ++used;
          }
        }
        if (used > 0) {
          value = sum / static_cast<double>(used);
          entry.rule = "moving_average";
        } else {
          value = clamp_value(old_value, ref, report.threshold);
          entry.rule = "clamp_fallback";
        }
      } else {
        value = clamp_value(old_value, ref, report.threshold);
        entry.rule = "clamp";
      }
      out.stream[i].acc[a] = value;
      entry.new_value = value;
      out.log.push_back(std::move(entry));
    }
  }
  return out;
}

dtw::Series resample_rows(const dtw::Series& series, std::size_t rows) {
  if (rows == 0) fail(ErrorKind::configuration, "cannot resample to zero rows");
  const std::size_t n = series.length();
  dtw::Series::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(series.dims()));
  for (std::size_t j = 0; j < rows; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    if (n == 1 || rows == 1) {
      m.row(r) = series.data().row(0);
      continue;
    }
    if (n == rows) {
      m.row(r) = series.data().row(r);
      continue;
    }
    const double u = static_cast<double>(j) * static_cast<double>(n - 1) /
                     static_cast<double>(rows - 1);
    const auto lo = std::min<std::size_t>(static_cast<std::size_t>(std::floor(u)), n - 2);
    const double frac = u - static_cast<double>(lo);
    const auto a = static_cast<Eigen::Index>(lo);
    m.row(r) = (1.0 - frac) * series.data().row(a) + frac * series.data().row(a + 1);
  }
  return dtw::Series(std::move(m));
}

MitigationResult mitigate_dtw(std::span<const ImuSample> stream,
                              const detect::DetectionReport& report,
                              const detect::TemplateLibrary& library,
                              const MitigationConfig& cfg) {
  cfg.validate();
  if (report.mode != detect::Mode::dtw) {
    fail(ErrorKind::configuration, "template substitution needs a dtw report");
  }
  if (cfg.mode != Mode::template_substitution) {
    fail(ErrorKind::configuration, "dtw reports are mitigated by template substitution");
  }
  check_stream(stream, report);
  const std::size_t dims = library.layout.dims;
  if (report.dims != dims) fail(ErrorKind::shape, "report and library dimensions differ");

  MitigationResult out;
  out.stream.assign(stream.begin(), stream.end());
  for (const auto& r : report.records) {
    if (r.verdict != detect::Verdict::abnormal) continue;
    if (!r.template_id) fail(ErrorKind::corrupted_report, "abnormal record without template id");
    const auto* tmpl = library.find(*r.template_id);
    if (!tmpl) fail(ErrorKind::corrupted_report, "unknown template id '" + *r.template_id + "'");
    if (r.start_index + r.length > stream.size()) {
      fail(ErrorKind::corrupted_report, "record exceeds stream bounds");
    }
    const auto rows = resample_rows(tmpl->rows, r.length);
    for (std::size_t k = 0; k < r.length; ++k) {
      auto& sample = out.stream[r.start_index + k];
      const auto row = rows.row(k);
      sample.acc = Vec3(row[0], row[1], row[2]);
      if (dims == 6) {
        if (!sample.gyro) fail(ErrorKind::shape, "6-channel template on accelerometer-only stream");
        sample.gyro = Vec3(row[3], row[4], row[5]);
      }
    }
    LogEntry entry;
    entry.start_index = r.start_index;
    entry.length = r.length;
    entry.rule = "template";
    entry.template_id = tmpl->id;
    out.log.push_back(std::move(entry));
  }
  return out;
}

std::string log_to_jsonl(const std::vector<LogEntry>& log) {
  std::ostringstream out;
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["start_index"] = e.start_index;
    j["length"] = e.length;
    j["rule"] = e.rule;
    if (e.axis) j["axis"] = std::string(1, static_cast<char>('x' + *e.axis));
    if (e.template_id) j["template_id"] = *e.template_id;
    if (e.old_value) j["old"] = *e.old_value;
    if (e.new_value) j["new"] = *e.new_value;
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace imu_guard::mitigate

#include "imu_guard/detect.hpp"

#include "imu_guard/error.hpp"
#include "imu_guard/io.hpp"
#include "imu_guard/kmedoids.hpp"
#include "imu_guard/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace imu_guard::detect {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string axes_to_string(std::uint8_t axes) {
  std::string out;
  if (axes & 1) out += 'x';
  if (axes & 2) out += 'y';
  if (axes & 4) out += 'z';
  return out;
}

std::uint8_t axes_from_string(std::string_view s) {
  std::uint8_t axes = 0;
  for (char c : s) {
    if (c == 'x') axes |= 1;
    else if (c == 'y') axes |= 2;
    else if (c == 'z') axes |= 4;
    else fail(ErrorKind::parse, "bad axis letter in '" + std::string(s) + "'");
  }
  return axes;
}

Verdict parse_verdict(std::string_view s) {
  if (s == "normal") return Verdict::normal;
  if (s == "abnormal") return Verdict::abnormal;
  if (s == "unprocessed") return Verdict::unprocessed;
  fail(ErrorKind::parse, "unknown verdict '" + std::string(s) + "'");
}

dtw::Series apply_layout(const dtw::Series& raw, const SeriesLayout& layout) {
  dtw::Series::Matrix m = raw.data();
  if (layout.dims == 6 && layout.gyro_weight != 1.0) m.rightCols(3) *= layout.gyro_weight;
  dtw::Series s(std::move(m));
  return layout.zscore ? dtw::zscore(s) : s;
}

dtw::Series raw_rows(std::span<const ImuSample> samples, std::size_t dims) {
  dtw::Series::Matrix m(static_cast<Eigen::Index>(samples.size()),
                        static_cast<Eigen::Index>(dims));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m.row(r).head<3>() = samples[i].acc.transpose();
    if (dims == 6) {
      if (!samples[i].gyro) {
        fail(ErrorKind::shape, "6-channel layout requires gyro samples");
      }
      m.row(r).tail<3>() = samples[i].gyro->transpose();
    }
  }
  return dtw::Series(std::move(m));
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::threshold ? "threshold" : "dtw"; }

Mode parse_mode(std::string_view name) {
  if (name == "threshold") return Mode::threshold;
  if (name == "dtw") return Mode::dtw;
  fail(ErrorKind::configuration, "unknown detector mode '" + std::string(name) + "'");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::normal: return "normal";
    case Verdict::abnormal: return "abnormal";
    case Verdict::unprocessed: return "unprocessed";
  }
  return "unknown";
}

void SeriesLayout::validate() const {
  if (dims != 3 && dims != 6) fail(ErrorKind::configuration, "dims must be 3 or 6");
  if (!std::isfinite(gyro_weight) || !(gyro_weight > 0.0)) {
    fail(ErrorKind::configuration, "gyro_weight must be > 0");
  }
}

dtw::Series to_series(std::span<const ImuSample> samples, const SeriesLayout& layout) {
  layout.validate();
  return apply_layout(raw_rows(samples, layout.dims), layout);
}

SlicedStream slice_stream(std::span<const ImuSample> stream, std::size_t slice_len) {
  if (slice_len == 0) fail(ErrorKind::configuration, "slice length must be > 0");
  SlicedStream out;
  const std::size_t full = stream.size() / slice_len;
  out.slices.reserve(full);
  for (std::size_t s = 0; s < full; ++s) {
    out.slices.push_back({s * slice_len, stream.subspan(s * slice_len, slice_len)});
  }
  out.residual_start = full * slice_len;
  out.residual_length = stream.size() - out.residual_start;
  return out;
}

std::vector<dtw::Series> TemplateLibrary::matching_series() const {
  std::vector<dtw::Series> out;
  out.reserve(templates.size());
  for (const auto& t : templates) out.push_back(apply_layout(t.rows, layout));
  return out;
}

const Template* TemplateLibrary::find(std::string_view id) const {
  for (const auto& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

void TemplateLibrary::validate() const {
  layout.validate();
  if (templates.empty()) fail(ErrorKind::configuration, "template library is empty");
  if (length == 0) fail(ErrorKind::configuration, "template length must be >= 1");
  for (const auto& t : templates) {
    if (t.rows.length() != length || t.rows.dims() != layout.dims) {
      fail(ErrorKind::shape, "template '" + t.id + "' does not match library shape");
    }
  }
}

std::string library_to_json(const TemplateLibrary& lib) {
  ordered_json j;
  j["version"] = TemplateLibrary::kVersion;
  j["d"] = lib.layout.dims;
  j["N"] = lib.length;
  j["gyro_weight"] = lib.layout.gyro_weight;
  j["zscore"] = lib.layout.zscore;
  j["templates"] = ordered_json::array();
  for (const auto& t : lib.templates) {
    ordered_json tj;
    tj["id"] = t.id;
    tj["label"] = t.label;
    tj["source"] = t.source;
    tj["offset"] = t.offset;
    ordered_json rows = ordered_json::array();
    for (std::size_t r = 0; r < t.rows.length(); ++r) {
      const auto row = t.rows.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    tj["rows"] = std::move(rows);
    j["templates"].push_back(std::move(tj));
  }
  return j.dump(1) + "\n";
}

TemplateLibrary library_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != TemplateLibrary::kVersion) {
      fail(ErrorKind::parse, "unsupported template library version");
    }
    TemplateLibrary lib;
    lib.layout.dims = j.at("d").get<std::size_t>();
    lib.length = j.at("N").get<std::size_t>();
    lib.layout.gyro_weight = j.at("gyro_weight").get<double>();
    lib.layout.zscore = j.value("zscore", false);
    for (const auto& tj : j.at("templates")) {
      const auto& rows = tj.at("rows");
      dtw::Series::Matrix m(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(lib.layout.dims));
      Eigen::Index r = 0;
      for (const auto& row : rows) {
        if (row.size() != lib.layout.dims) fail(ErrorKind::shape, "template row width mismatch");
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        ++r;
      }
      lib.templates.push_back({tj.at("id").get<std::string>(), tj.at("label").get<std::string>(),
                               dtw::Series(std::move(m)), tj.value("source", std::string{}),
                               tj.value("offset", std::size_t{0})});
    }
    lib.validate();
    return lib;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("template library JSON: ") + e.what());
  }
}

void save_library(const std::filesystem::path& path, const TemplateLibrary& library) {
  io::write_text(path, library_to_json(library));
}

TemplateLibrary load_library(const std::filesystem::path& path) {
  return library_from_json(io::read_text(path));
}

TemplateLibrary extract_templates(std::span<const Recording> recordings, std::size_t length,
                                  std::size_t count, const ExtractionOptions& options,
                                  unsigned parallelism) {
  options.layout.validate();
  if (length == 0 || count == 0) {
    fail(ErrorKind::configuration, "template length and count must be >= 1");
  }
  const std::size_t stride = options.stride.value_or(length);
  if (stride == 0) fail(ErrorKind::configuration, "template stride must be >= 1");

  std::size_t total = 0;
  for (const auto& r : recordings) total += r.stream.size();
  if (total < count * length) {
    fail(ErrorKind::insufficient_data, "need at least " + std::to_string(count * length) +
                                           " clean samples, have " + std::to_string(total));
  }

  struct Candidate {
    std::size_t recording;
    std::size_t offset;
    dtw::Series raw;
    dtw::Series matching;
  };
  std::vector<std::string> labels;
  std::vector<std::vector<Candidate>> groups;
  for (std::size_t ri = 0; ri < recordings.size(); ++ri) {
    const auto& rec = recordings[ri];
    auto it = std::find(labels.begin(), labels.end(), rec.label);
    if (it == labels.end()) {
      labels.push_back(rec.label);
      groups.emplace_back();
      it = labels.end() - 1;
    }
    auto& group = groups[static_cast<std::size_t>(it - labels.begin())];
    const std::span<const ImuSample> stream(rec.stream);
    for (std::size_t off = 0; off + length <= stream.size(); off += stride) {
      dtw::Series raw = raw_rows(stream.subspan(off, length), options.layout.dims);
      dtw::Series matching = apply_layout(raw, options.layout);
      group.push_back({ri, off, std::move(raw), std::move(matching)});
    }
  }
  if (count < labels.size()) {
    fail(ErrorKind::configuration, "template count is smaller than the number of labels");
  }

  // Largest-remainder apportionment with a floor of one per label.
  std::size_t candidates = 0;
  for (const auto& g : groups) candidates += g.size();
  std::vector<std::size_t> quota(labels.size(), 1);
  std::size_t remaining = count - labels.size();
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const double share = static_cast<double>(remaining) * static_cast<double>(groups[l].size()) /
                         static_cast<double>(candidates);
    const auto whole = static_cast<std::size_t>(std::floor(share));
    quota[l] += whole;
    remainders.emplace_back(share - static_cast<double>(whole), l);
  }
  std::size_t assigned = 0;
  for (auto q : quota) assigned += q;
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quota[remainders[i].second];

  TemplateLibrary lib;
  lib.layout = options.layout;
  lib.length = length;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const auto& group = groups[l];
    if (group.size() < quota[l]) {
      fail(ErrorKind::insufficient_data, "label '" + labels[l] + "' has " +
                                             std::to_string(group.size()) + " windows, needs " +
                                             std::to_string(quota[l]));
    }
    const auto n = static_cast<Eigen::Index>(group.size());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    parallel_for(group.size(), parallelism, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            dtw::dtw_distance(group[i].matching, group[j].matching);
      }
    });
    dist.triangularView<Eigen::StrictlyLower>() = dist.transpose();
    const auto clustering = kmedoids::pam(dist, quota[l]);
    for (std::size_t m = 0; m < clustering.medoids.size(); ++m) {
      const auto& c = group[clustering.medoids[m]];
      lib.templates.push_back({labels[l] + "_" + std::to_string(m), labels[l], c.raw,
                               recordings[c.recording].source, c.offset});
    }
  }
  return lib;
}

void DetectorConfig::validate() const {
  if (slice_len == 0) fail(ErrorKind::configuration, "slice length must be > 0");
  if (mode == Mode::threshold) {
    if (!(acc_threshold > 0.0)) fail(ErrorKind::configuration, "acc_threshold must be > 0");
  } else {
    if (!(dtw_threshold > 0.0)) fail(ErrorKind::configuration, "dtw_threshold must be > 0");
    if (!templates || templates->templates.empty()) {
      fail(ErrorKind::configuration, "dtw mode requires a non-empty template library");
    }
    templates->validate();
  }
}

Vec3 static_reference(const WorldModel& world) { return {0.0, 0.0, world.gravity.norm()}; }

DetectionReport detect_threshold(std::span<const ImuSample> stream, const DetectorConfig& cfg) {
  if (!(cfg.acc_threshold > 0.0)) fail(ErrorKind::configuration, "acc_threshold must be > 0");
  DetectionReport report;
  report.mode = Mode::threshold;
  report.stream_length = stream.size();
  report.slice_len = 1;
  report.dims = 3;
  report.threshold = cfg.acc_threshold;
  report.reference = static_reference(cfg.world);

  for (std::size_t i = 0; i < stream.size(); ++i) {
    std::uint8_t axes = 0;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(stream[i].acc[a] - report.reference[a]) > cfg.acc_threshold) {
        axes |= static_cast<std::uint8_t>(1u << a);
      }
    }
    if (axes == 0) continue;
    if (report.records.empty() ||
        report.records.back().start_index + report.records.back().length != i) {
      Record r;
      r.start_index = i;
      r.verdict = Verdict::abnormal;
      report.records.push_back(r);
    }
    auto& run = report.records.back();
    run.flagged.push_back({i, axes});
    ++run.length;
  }
  return report;
}

DetectionReport detect_dtw(const SlicedStream& sliced, std::size_t stream_length,
                           const DetectorConfig& cfg) {
  cfg.validate();
  if (cfg.mode != Mode::dtw) fail(ErrorKind::configuration, "detect_dtw requires dtw mode");
  const auto& lib = *cfg.templates;
  const auto templates = lib.matching_series();

  DetectionReport report;
  report.mode = Mode::dtw;
  report.stream_length = stream_length;
  report.slice_len = cfg.slice_len;
  report.dims = lib.layout.dims;
  report.threshold = cfg.dtw_threshold;
  report.reference = static_reference(cfg.world);
  report.records.resize(sliced.slices.size());

  parallel_for(sliced.slices.size(), cfg.parallelism, [&](std::size_t s) {
    const auto& slice = sliced.slices[s];
    const auto query = to_series(slice.samples, lib.layout);
    const auto match = dtw::best_match(query, templates, 1);
    Record& r = report.records[s];
    r.start_index = slice.start_index;
    r.length = slice.samples.size();
    r.best_distance = match.distance;
    r.template_id = lib.templates[match.template_index].id;
    r.verdict = match.distance <= cfg.dtw_threshold ? Verdict::normal : Verdict::abnormal;
  });
  if (sliced.residual_length > 0) {
    Record r;
    r.start_index = sliced.residual_start;
    r.length = sliced.residual_length;
    r.verdict = Verdict::unprocessed;
    report.records.push_back(r);
  }
  return report;
}

DetectionReport detect(std::span<const ImuSample> stream, const DetectorConfig& cfg) {
  if (cfg.mode == Mode::threshold) return detect_threshold(stream, cfg);
  const auto sliced = slice_stream(stream, cfg.slice_len);
  return detect_dtw(sliced, stream.size(), cfg);
}

std::string report_to_jsonl(const DetectionReport& report) {
  std::ostringstream out;
  ordered_json header;
  header["type"] = "header";
  header["version"] = 1;
  header["mode"] = to_string(report.mode);
  header["stream_length"] = report.stream_length;
  header["slice_len"] = report.slice_len;
  header["dims"] = report.dims;
  header["threshold"] = report.threshold;
  header["reference"] = {report.reference.x(), report.reference.y(), report.reference.z()};
  out << header.dump() << '\n';
  for (const auto& r : report.records) {
    ordered_json j;
    j["type"] = "record";
    j["start_index"] = r.start_index;
    j["length"] = r.length;
    j["verdict"] = to_string(r.verdict);
    if (r.best_distance) j["best_distance"] = *r.best_distance;
    if (r.template_id) j["template_id"] = *r.template_id;
    if (!r.flagged.empty()) {
      ordered_json flags = ordered_json::array();
      for (const auto& f : r.flagged) {
        flags.push_back(ordered_json{{"index", f.index}, {"axes", axes_to_string(f.axes)}});
      }
      j["flagged"] = std::move(flags);
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

DetectionReport report_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  DetectionReport report;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        report.mode = parse_mode(j.at("mode").get<std::string>());
        report.stream_length = j.at("stream_length").get<std::size_t>();
        report.slice_len = j.at("slice_len").get<std::size_t>();
        report.dims = j.at("dims").get<std::size_t>();
        report.threshold = j.at("threshold").get<double>();
        const auto ref = j.at("reference").get<std::vector<double>>();
        if (ref.size() != 3) fail(ErrorKind::parse, "report reference must have 3 values");
        report.reference = Vec3(ref[0], ref[1], ref[2]);
        have_header = true;
      } else if (type == "record") {
        if (!have_header) fail(ErrorKind::parse, "report record before header");
        Record r;
        r.start_index = j.at("start_index").get<std::size_t>();
        r.length = j.at("length").get<std::size_t>();
        r.verdict = parse_verdict(j.at("verdict").get<std::string>());
        if (j.contains("best_distance")) r.best_distance = j["best_distance"].get<double>();
        if (j.contains("template_id")) r.template_id = j["template_id"].get<std::string>();
        if (j.contains("flagged")) {
          for (const auto& f : j["flagged"]) {
            r.flagged.push_back({f.at("index").get<std::size_t>(),
                                 axes_from_string(f.at("axes").get<std::string>())});
          }
        }
        if (r.start_index + r.length > report.stream_length) {
          fail(ErrorKind::corrupted_report, "report record exceeds stream bounds");
        }
        report.records.push_back(std::move(r));
      } else {
        fail(ErrorKind::parse, "unknown report line type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("report JSONL: ") + e.what());
  }
  if (!have_header) fail(ErrorKind::parse, "report has no header line");
  return report;
}

double calibrate_dtw_threshold(const TemplateLibrary& library,
                               std::span<const dtw::Series> validation, double target_pass,
                               double margin, unsigned parallelism, double min_threshold) {
  if (validation.empty()) fail(ErrorKind::insufficient_data, "no validation slices");
  if (!(target_pass > 0.0 && target_pass < 1.0)) {
    fail(ErrorKind::configuration, "target_pass must lie in (0, 1)");
  }
  if (!(margin > 0.0)) fail(ErrorKind::configuration, "calibration margin must be > 0");
  library.validate();
  const auto templates = library.matching_series();
  std::vector<double> distances(validation.size());
  parallel_for(validation.size(), parallelism, [&](std::size_t i) {
    distances[i] = dtw::best_match(validation[i], templates, 1).distance;
  });
  std::sort(distances.begin(), distances.end());
  const double n = static_cast<double>(distances.size());
  const auto rank = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(target_pass * n)),
                                            1, distances.size());
  return std::max(distances[rank - 1] * margin, min_threshold);
}

std::vector<dtw::Series> validation_slices(std::span<const ImuStream> streams,
                                           std::size_t slice_len, const SeriesLayout& layout) {
  std::vector<dtw::Series> out;
  for (const auto& s : streams) {
    for (const auto& slice : slice_stream(s, slice_len).slices) {
      out.push_back(to_series(slice.samples, layout));
    }
  }
  return out;
}

double SliceScore::recall() const {
  const auto positives = true_positive + false_negative;
  return positives == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(positives);
}

double SliceScore::false_positive_rate() const {
  const auto negatives = false_positive + true_negative;
  return negatives == 0 ? 0.0
                        : static_cast<double>(false_positive) / static_cast<double>(negatives);
}

SliceScore score_slices(const DetectionReport& report, const std::vector<bool>& mask) {
  if (report.mode != Mode::dtw) fail(ErrorKind::configuration, "slice scoring needs a dtw report");
  if (mask.size() != report.stream_length) fail(ErrorKind::shape, "mask length mismatch");
  SliceScore score;
  for (const auto& r : report.records) {
    if (r.verdict == Verdict::unprocessed) continue;
    const bool faulty = std::any_of(mask.begin() + static_cast<std::ptrdiff_t>(r.start_index),
                                    mask.begin() + static_cast<std::ptrdiff_t>(r.start_index + r.length),
                                    [](bool b) { return b; });
    const bool flagged = r.verdict == Verdict::abnormal;
    if (faulty && flagged) ++score.true_positive;
    else if (faulty) ++score.false_negative;
    else if (flagged) ++score.false_positive;
    else ++score.true_negative;
  }
  return score;
}

}  // namespace imu_guard::detect

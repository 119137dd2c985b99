#include "imu_guard/pipeline.hpp"

#include "imu_guard/error.hpp"
#include "imu_guard/io.hpp"
#include "imu_guard/parallel.hpp"

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace imu_guard::pipeline {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& value : *a) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  std::ostringstream ss;
  if (const auto* v = node.as_date()) ss << v->get();
  else if (const auto* v = node.as_time()) ss << v->get();
  else if (const auto* v = node.as_date_time()) ss << v->get();
  return ss.str();
}

// Rejects keys outside `allowed` so misspelled settings do not pass silently.
void check_keys(const json& obj, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(ErrorKind::configuration, std::string(section) + " must be a table");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorKind::configuration, "unknown key '" + key + "' in " + std::string(section));
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj[key].is_null()) out = obj[key].get<T>();
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& out) {
  if (obj.contains(key) && !obj[key].is_null()) out = obj[key].get<T>();
}

Vec3 read_vec3(const json& v, const char* what) {
  const auto values = v.get<std::vector<double>>();
  if (values.size() != 3) fail(ErrorKind::configuration, std::string(what) + " needs 3 values");
  return {values[0], values[1], values[2]};
}

std::uint8_t parse_axes(const std::string& s) {
  std::uint8_t axes = 0;
  for (char c : s) {
    if (c == 'x') axes |= 1;
    else if (c == 'y') axes |= 2;
    else if (c == 'z') axes |= 4;
    else fail(ErrorKind::configuration, "glitch_axes must use letters x, y, z");
  }
  return axes;
}

std::string axes_string(std::uint8_t axes) {
  std::string out;
  if (axes & 1) out += 'x';
  if (axes & 2) out += 'y';
  if (axes & 4) out += 'z';
  return out;
}

SimulationSettings parse_simulation(const json& j) {
  check_keys(j, "simulation",
             {"preset", "shape", "poses", "duration", "imu_rate", "radius_x", "radius_y",
              "z_amplitude", "z_frequency_ratio", "roll_amplitude", "pitch_amplitude",
              "angular_rate", "speed", "heading", "acc_sigma", "gyro_sigma", "acc_bias",
              "gyro_bias", "glitch_mu", "glitch_sigma", "affected_fraction", "burst_len",
              "glitch_axes", "template_recordings", "validation_recordings"});
  SimulationSettings s;
  read(j, "preset", s.preset);
  auto& t = s.trajectory;
  if (j.contains("shape")) t.shape = sim::parse_shape(j["shape"].get<std::string>());
  read(j, "poses", t.pose_count);
  read(j, "duration", t.duration);
  read(j, "imu_rate", t.imu_rate);
  read(j, "radius_x", t.radius_x);
  read(j, "radius_y", t.radius_y);
  read(j, "z_amplitude", t.z_amplitude);
  read(j, "z_frequency_ratio", t.z_frequency_ratio);
  read(j, "roll_amplitude", t.roll_amplitude);
  read(j, "pitch_amplitude", t.pitch_amplitude);
  read(j, "angular_rate", t.angular_rate);
  read(j, "speed", t.speed);
  read(j, "heading", t.heading);
  read(j, "acc_sigma", s.acc_sigma);
  read(j, "gyro_sigma", s.gyro_sigma);
  if (j.contains("acc_bias")) s.bias.acc = read_vec3(j["acc_bias"], "acc_bias");
  if (j.contains("gyro_bias")) s.bias.gyro = read_vec3(j["gyro_bias"], "gyro_bias");
  read(j, "glitch_mu", s.glitch_mu);
  read(j, "glitch_sigma", s.glitch_sigma);
  read(j, "affected_fraction", s.affected_fraction);
  read(j, "burst_len", s.burst_len);
  if (j.contains("glitch_axes")) s.glitch_axes = parse_axes(j["glitch_axes"].get<std::string>());
  read(j, "template_recordings", s.template_recordings);
  read(j, "validation_recordings", s.validation_recordings);
  return s;
}

InputSettings parse_input(const json& j) {
  check_keys(j, "input", {"imu_csv", "truth_tum", "mask_json", "templates_json",
                          "template_recordings", "validation_csv"});
  InputSettings in;
  in.imu_csv = j.at("imu_csv").get<std::string>();
  in.truth_tum = j.at("truth_tum").get<std::string>();
  if (j.contains("mask_json")) in.mask_json = j["mask_json"].get<std::string>();
  if (j.contains("templates_json")) in.templates_json = j["templates_json"].get<std::string>();
  if (j.contains("template_recordings")) {
    for (const auto& r : j["template_recordings"]) {
      check_keys(r, "input.template_recordings", {"path", "label"});
      in.template_recordings.push_back(
          {r.at("path").get<std::string>(), r.value("label", std::string("default"))});
    }
  }
  if (j.contains("validation_csv")) {
    for (const auto& p : j["validation_csv"]) in.validation_csv.emplace_back(p.get<std::string>());
  }
  return in;
}

PipelineConfig parse_json_config(const json& j) {
  check_keys(j, "config", {"version", "seed", "output_dir", "simulation", "input", "templates",
                           "detector", "mitigation", "integrator", "evaluation", "variants"});
  PipelineConfig cfg;
  if (!j.contains("version")) fail(ErrorKind::configuration, "config needs a 'version' field");
  cfg.version = j["version"].get<int>();
  read(j, "seed", cfg.seed);
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("simulation")) cfg.simulation = parse_simulation(j["simulation"]);
  if (j.contains("input")) cfg.input = parse_input(j["input"]);
  if (j.contains("templates")) {
    const auto& t = j["templates"];
    check_keys(t, "templates", {"count", "length", "stride"});
    read(t, "count", cfg.templates.count);
    read(t, "length", cfg.templates.length);
    read(t, "stride", cfg.templates.stride);
  }
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    check_keys(d, "detector", {"dims", "slice_len", "acc_threshold", "dtw_threshold",
                               "target_pass", "margin", "gyro_weight", "zscore", "parallelism"});
    auto& s = cfg.detector;
    read(d, "dims", s.dims);
    read(d, "slice_len", s.slice_len);
    read(d, "acc_threshold", s.acc_threshold);
    read(d, "dtw_threshold", s.dtw_threshold);
    read(d, "target_pass", s.target_pass);
    read(d, "margin", s.margin);
    read(d, "gyro_weight", s.gyro_weight);
    read(d, "zscore", s.zscore);
    read(d, "parallelism", s.parallelism);
  }
  if (j.contains("mitigation")) {
    check_keys(j["mitigation"], "mitigation", {"window_n"});
    read(j["mitigation"], "window_n", cfg.window_n);
  }
  if (j.contains("integrator")) {
    const auto& g = j["integrator"];
    check_keys(g, "integrator", {"method", "anchor_period", "acc_bias", "gyro_bias"});
    if (g.contains("method")) cfg.method = ins::parse_method(g["method"].get<std::string>());
    if (g.contains("anchor_period")) {
      if (g["anchor_period"].is_null() || g["anchor_period"].get<double>() == 0.0) {
        cfg.anchor_period.reset();
      } else {
        cfg.anchor_period = g["anchor_period"].get<double>();
      }
    }
    if (g.contains("acc_bias")) cfg.integrator_bias.acc = read_vec3(g["acc_bias"], "acc_bias");
    if (g.contains("gyro_bias")) cfg.integrator_bias.gyro = read_vec3(g["gyro_bias"], "gyro_bias");
  }
  if (j.contains("evaluation")) {
    const auto& e = j["evaluation"];
    check_keys(e, "evaluation", {"align", "lengths", "max_dt"});
    if (e.contains("align")) cfg.evaluation.alignment = eval::parse_alignment(e["align"].get<std::string>());
    read(e, "lengths", cfg.evaluation.lengths);
    read(e, "max_dt", cfg.evaluation.max_dt);
  }
  if (j.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : j["variants"]) {
      check_keys(v, "variants", {"name", "detector", "mitigation"});
      VariantSpec spec;
      spec.name = v.at("name").get<std::string>();
      if (v.contains("detector") && !v["detector"].is_null() && v["detector"] != "none") {
        spec.detector = detect::parse_mode(v["detector"].get<std::string>());
      }
      if (v.contains("mitigation") && !v["mitigation"].is_null() && v["mitigation"] != "none") {
        spec.mitigation = mitigate::parse_mode(v["mitigation"].get<std::string>());
      }
      cfg.variants.push_back(std::move(spec));
    }
  }
  return cfg;
}

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + name + "': " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + name + "': " + e.what());
  }
}

struct RunData {
  Trajectory reference;
  NavState initial;
  ImuStream stream;
  std::optional<ImuStream> clean;
  std::optional<std::vector<bool>> mask;
  std::optional<sim::GlitchResult> glitches;
  std::optional<sim::GlitchSpec> glitch_spec;
  std::vector<detect::Recording> template_recordings;
  std::vector<ImuStream> validation;
};

RunData simulate_run(const PipelineConfig& cfg) {
  const auto& s = *cfg.simulation;
  RunData data;
  const WorldModel world;
  const auto truth = sim::generate_truth(s.trajectory);
  const double rate = s.trajectory.imu_rate;
  auto synth = [&](std::uint64_t stream_id) {
    const NoiseSpec noise{s.acc_sigma, s.gyro_sigma, derive_seed(cfg.seed, stream_id)};
    return sim::synthesize_imu(truth, s.bias, noise, world, rate, true);
  };
  data.clean = synth(1);
  sim::GlitchSpec glitch = sim::preset(s.preset);
  if (s.glitch_mu) glitch.mu = *s.glitch_mu;
  if (s.glitch_sigma) glitch.sigma = *s.glitch_sigma;
  glitch.affected_fraction = s.affected_fraction;
  glitch.burst_len = s.burst_len;
  glitch.axes = s.glitch_axes;
  glitch.seed = derive_seed(cfg.seed, 2);
  data.glitches = sim::inject_glitches(*data.clean, glitch);
  data.glitch_spec = glitch;
  data.stream = data.glitches->stream;
  data.mask = data.glitches->mask;
  data.reference = truth.trajectory();
  data.initial = truth.at(data.stream.front().t).nav();
  const std::string label(sim::to_string(s.trajectory.shape));
  for (std::size_t i = 0; i < s.template_recordings; ++i) {
    data.template_recordings.push_back(
        {label, "history_" + std::to_string(i), synth(100 + i)});
  }
  for (std::size_t i = 0; i < s.validation_recordings; ++i) data.validation.push_back(synth(200 + i));
  return data;
}

RunData load_run(const PipelineConfig& cfg) {
  const auto& in = *cfg.input;
  RunData data;
  data.stream = io::load_imu_csv(in.imu_csv);
  data.reference = io::load_tum(in.truth_tum);
  if (data.reference.size() < 2) fail(ErrorKind::insufficient_data, "truth needs >= 2 poses");
  if (in.mask_json) data.mask = sim::mask_from_json(io::read_text(*in.mask_json));
  data.initial = ins::initial_state(data.reference, data.stream.front().t);
  for (const auto& r : in.template_recordings) {
    data.template_recordings.push_back({r.label, r.path.filename().string(), io::load_imu_csv(r.path)});
  }
  for (const auto& p : in.validation_csv) data.validation.push_back(io::load_imu_csv(p));
  return data;
}

std::size_t count_changed(std::span<const ImuSample> a, std::span<const ImuSample> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool gyro_diff = a[i].gyro.has_value() && b[i].gyro.has_value() && *a[i].gyro != *b[i].gyro;
    if (a[i].acc != b[i].acc || gyro_diff) ++n;
  }
  return n;
}

ordered_json score_json(const detect::SliceScore& s) {
  return {{"true_positive", s.true_positive}, {"false_positive", s.false_positive},
          {"false_negative", s.false_negative}, {"true_negative", s.true_negative},
          {"recall", s.recall()}, {"false_positive_rate", s.false_positive_rate()}};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<VariantSpec> PipelineConfig::default_variants() {
  return {{"raw", std::nullopt, std::nullopt},
          {"threshold", detect::Mode::threshold, mitigate::Mode::clamp},
          {"dtw", detect::Mode::dtw, mitigate::Mode::template_substitution}};
}

void PipelineConfig::validate() const {
  if (version != kConfigVersion) {
    fail(ErrorKind::configuration, "unsupported config version " + std::to_string(version));
  }
  if (simulation.has_value() == input.has_value()) {
    fail(ErrorKind::configuration, "exactly one of 'simulation' and 'input' is required");
  }
  if (variants.empty()) fail(ErrorKind::configuration, "no variants requested");
  std::set<std::string> names;
  bool needs_templates = false;
  for (const auto& v : variants) {
    if (v.name.empty() || !names.insert(v.name).second) {
      fail(ErrorKind::configuration, "variant names must be unique and non-empty");
    }
    if (v.mitigation && !v.detector) {
      fail(ErrorKind::configuration, "variant '" + v.name + "': mitigation without detection");
    }
    if (v.mitigation == mitigate::Mode::template_substitution && v.detector != detect::Mode::dtw) {
      fail(ErrorKind::configuration,
           "variant '" + v.name + "': template substitution requires dtw detection");
    }
    if (v.mitigation && *v.mitigation != mitigate::Mode::template_substitution &&
        v.detector != detect::Mode::threshold) {
      fail(ErrorKind::configuration,
           "variant '" + v.name + "': clamp/moving_average require threshold detection");
    }
    if (v.detector == detect::Mode::dtw) needs_templates = true;
  }
  if (detector.dims != 3 && detector.dims != 6) fail(ErrorKind::configuration, "detector.dims must be 3 or 6");
  if (detector.slice_len == 0) fail(ErrorKind::configuration, "detector.slice_len must be > 0");
  if (!(detector.acc_threshold > 0.0)) fail(ErrorKind::configuration, "detector.acc_threshold must be > 0");
  if (detector.dtw_threshold && !(*detector.dtw_threshold > 0.0)) {
    fail(ErrorKind::configuration, "detector.dtw_threshold must be > 0");
  }
  if (window_n == 0) fail(ErrorKind::configuration, "mitigation.window_n must be >= 1");
  if (anchor_period && !(*anchor_period > 0.0)) {
    fail(ErrorKind::configuration, "integrator.anchor_period must be > 0");
  }
  if (simulation) {
    simulation->trajectory.validate();
    sim::preset(simulation->preset);
    if (needs_templates && !detector.dtw_threshold && simulation->validation_recordings == 0) {
      fail(ErrorKind::configuration, "dtw calibration needs validation recordings");
    }
    if (needs_templates && simulation->template_recordings == 0) {
      fail(ErrorKind::configuration, "dtw detection needs template recordings");
    }
  }
  if (input) {
    for (const auto& p : {input->imu_csv, input->truth_tum}) {
      if (!fs::exists(p)) fail(ErrorKind::configuration, "input file does not exist: " + p.string());
    }
    if (needs_templates) {
      if (!input->templates_json && input->template_recordings.empty()) {
        fail(ErrorKind::configuration, "dtw detection needs templates_json or template_recordings");
      }
      if (!detector.dtw_threshold && input->validation_csv.empty()) {
        fail(ErrorKind::configuration, "dtw calibration needs validation_csv or dtw_threshold");
      }
    }
  }
}

PipelineConfig parse_config(const std::string& text) {
  const auto first = std::find_if(text.begin(), text.end(),
                                  [](unsigned char c) { return !std::isspace(c); });
  try {
    json j;
    if (first != text.end() && *first == '{') {
      j = json::parse(text);
    } else {
      j = toml_to_json(toml::parse(text));
    }
    return parse_json_config(j);
  } catch (const json::exception& e) {
    fail(ErrorKind::configuration, std::string("config: ") + e.what());
  } catch (const toml::parse_error& e) {
    fail(ErrorKind::configuration, std::string("config (TOML): ") + std::string(e.description()));
  }
}

PipelineConfig load_config(const fs::path& path) {
  PipelineConfig cfg = parse_config(io::read_text(path));
  const fs::path base = path.parent_path();
  auto resolve = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(cfg.output_dir);
  if (cfg.input) {
    resolve(cfg.input->imu_csv);
    resolve(cfg.input->truth_tum);
    if (cfg.input->mask_json) resolve(*cfg.input->mask_json);
    if (cfg.input->templates_json) resolve(*cfg.input->templates_json);
    for (auto& r : cfg.input->template_recordings) resolve(r.path);
    for (auto& p : cfg.input->validation_csv) resolve(p);
  }
  return cfg;
}

const VariantResult& PipelineResult::variant(std::string_view name) const {
  for (const auto& v : variants) {
    if (v.spec.name == name) return v;
  }
  fail(ErrorKind::configuration, "no variant named '" + std::string(name) + "'");
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  stage("validate", [&] { cfg.validate(); });
  const bool write = !cfg.output_dir.empty();
  const unsigned threads = effective_parallelism(cfg.detector.parallelism);
  if (write) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + cfg.output_dir.string() + ": " + ec.message());
  }
  auto out_path = [&](const fs::path& rel) { return cfg.output_dir / rel; };

  RunData data = cfg.simulation ? stage("simulate", [&] { return simulate_run(cfg); })
                                : stage("load", [&] { return load_run(cfg); });
  if (write) {
    stage("write-inputs", [&] {
      io::save_tum(out_path("truth.tum"), data.reference);
      io::save_imu_csv(out_path("corrupted.csv"), data.stream);
      if (data.clean) io::save_imu_csv(out_path("clean.csv"), *data.clean);
      if (data.glitches) io::write_text(out_path("mask.json"), sim::mask_to_json(*data.glitches, *data.glitch_spec));
    });
  }

  const detect::SeriesLayout layout{cfg.detector.dims, cfg.detector.gyro_weight, cfg.detector.zscore};
  const bool needs_templates = std::any_of(cfg.variants.begin(), cfg.variants.end(), [](const auto& v) {
    return v.detector == detect::Mode::dtw;
  });
  std::shared_ptr<const detect::TemplateLibrary> library;
  double dtw_threshold = cfg.detector.dtw_threshold.value_or(0.0);
  if (needs_templates) {
    library = stage("templates", [&] {
      if (cfg.input && cfg.input->templates_json) {
        return std::make_shared<const detect::TemplateLibrary>(detect::load_library(*cfg.input->templates_json));
      }
      detect::ExtractionOptions opts{layout, cfg.templates.stride};
      return std::make_shared<const detect::TemplateLibrary>(detect::extract_templates(
          data.template_recordings, cfg.templates.length, cfg.templates.count, opts, threads));
    });
    if (write) stage("write-templates", [&] { detect::save_library(out_path("templates.json"), *library); });
    if (!cfg.detector.dtw_threshold) {
      dtw_threshold = stage("calibrate", [&] {
        const auto slices = detect::validation_slices(data.validation, cfg.detector.slice_len, library->layout);
        return detect::calibrate_dtw_threshold(*library, slices, cfg.detector.target_pass,
                                               cfg.detector.margin, threads);
      });
    }
  }

  ins::IntegratorConfig icfg;
  icfg.method = cfg.method;
  icfg.bias = cfg.integrator_bias;
  if (cfg.anchor_period) {
    icfg.anchor_period = cfg.anchor_period;
    icfg.anchor_source = std::make_shared<const Trajectory>(data.reference);
  }

  PipelineResult result;
  result.dtw_threshold = dtw_threshold;
  result.stream_length = data.stream.size();
  if (data.mask) result.faulty_samples = static_cast<std::size_t>(std::count(data.mask->begin(), data.mask->end(), true));
  result.variants.resize(cfg.variants.size());

  parallel_for(cfg.variants.size(), threads, [&](std::size_t vi) {
    const auto& spec = cfg.variants[vi];
    VariantResult& vr = result.variants[vi];
    vr.spec = spec;
    const fs::path dir = cfg.output_dir / spec.name;
    if (write) fs::create_directories(dir);
    const std::string tag = " (" + spec.name + ")";

    ImuStream cleaned = data.stream;
    if (spec.detector) {
      detect::DetectorConfig dcfg;
      dcfg.mode = *spec.detector;
      dcfg.acc_threshold = cfg.detector.acc_threshold;
      dcfg.dtw_threshold = dtw_threshold;
      dcfg.templates = library;
      dcfg.slice_len = cfg.detector.slice_len;
      dcfg.parallelism = 1;
      const auto report = stage("detect" + tag, [&] { return detect::detect(data.stream, dcfg); });
      vr.flagged_records = static_cast<std::size_t>(std::count_if(
          report.records.begin(), report.records.end(),
          [](const auto& r) { return r.verdict == detect::Verdict::abnormal; }));
      if (report.mode == detect::Mode::dtw && data.mask) vr.slice_score = detect::score_slices(report, *data.mask);
      if (write) io::write_text(dir / "report.jsonl", detect::report_to_jsonl(report));
      if (spec.mitigation) {
        const mitigate::MitigationConfig mcfg{*spec.mitigation, cfg.window_n};
        auto mitigated = stage("mitigate" + tag, [&] {
          return report.mode == detect::Mode::dtw
                     ? mitigate::mitigate_dtw(data.stream, report, *library, mcfg)
                     : mitigate::mitigate_threshold(data.stream, report, mcfg);
        });
        cleaned = std::move(mitigated.stream);
        if (write) io::write_text(dir / "mitigation_log.jsonl", mitigate::log_to_jsonl(mitigated.log));
      }
    }
    vr.changed_samples = count_changed(data.stream, cleaned);
    if (write) io::save_imu_csv(dir / "cleaned.csv", cleaned);

    const auto trajectory = stage("integrate" + tag, [&] { return ins::integrate(data.initial, cleaned, icfg); });
    if (write) io::save_tum(dir / "trajectory.tum", trajectory);
    vr.metrics = stage("evaluate" + tag, [&] { return eval::evaluate(trajectory, data.reference, cfg.evaluation); });
    if (write) {
      io::write_text(dir / "metrics.json", eval::report_to_json(vr.metrics));
      io::write_text(dir / "relative_errors.csv", eval::relative_errors_csv(vr.metrics));
    }
  });

  ordered_json summary;
  summary["version"] = 1;
  summary["seed"] = cfg.seed;
  summary["source"] = cfg.simulation ? "simulation" : "input";
  if (cfg.simulation) {
    summary["preset"] = cfg.simulation->preset;
    summary["shape"] = sim::to_string(cfg.simulation->trajectory.shape);
    summary["glitch_axes"] = axes_string(cfg.simulation->glitch_axes);
  }
  summary["stream_length"] = result.stream_length;
  summary["faulty_samples"] = result.faulty_samples;
  summary["integrator"] = ins::to_string(cfg.method);
  summary["anchor_period"] = cfg.anchor_period ? ordered_json(*cfg.anchor_period) : ordered_json(nullptr);
  summary["alignment"] = eval::to_string(cfg.evaluation.alignment);
  if (library) {
    summary["templates"] = library->templates.size();
    summary["template_length"] = library->length;
    summary["dtw_threshold"] = dtw_threshold;
  }
  summary["acc_threshold"] = cfg.detector.acc_threshold;
  ordered_json variants = ordered_json::array();
  ordered_json ate = ordered_json::object();
  for (const auto& v : result.variants) {
    ordered_json vj;
    vj["name"] = v.spec.name;
    vj["detector"] = v.spec.detector ? std::string(detect::to_string(*v.spec.detector)) : "none";
    vj["mitigation"] = v.spec.mitigation ? std::string(mitigate::to_string(*v.spec.mitigation)) : "none";
    vj["ate_rmse"] = v.metrics.ate_rmse;
    vj["flagged_records"] = v.flagged_records;
    vj["changed_samples"] = v.changed_samples;
    if (v.slice_score) vj["slice_score"] = score_json(*v.slice_score);
    ordered_json rel = ordered_json::array();
    for (const auto& s : v.metrics.relative.stats) {
      rel.push_back({{"length", s.length}, {"translation_mean", s.translation_mean},
                     {"translation_median", s.translation_median}, {"yaw_mean_deg", s.yaw_mean},
                     {"yaw_median_deg", s.yaw_median}});
    }
    vj["relative"] = std::move(rel);
    ate[v.spec.name] = v.metrics.ate_rmse;
    variants.push_back(std::move(vj));
  }
  summary["ate_rmse"] = std::move(ate);
  summary["variants"] = std::move(variants);
  result.summary_json = summary.dump(2) + "\n";
  if (write) io::write_text(out_path("summary.json"), result.summary_json);
  return result;
}

}  // namespace imu_guard::pipeline

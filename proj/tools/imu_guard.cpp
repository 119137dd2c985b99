#include "imu_guard/detect.hpp"
#include "imu_guard/dtw.hpp"
#include "imu_guard/error.hpp"
#include "imu_guard/eval.hpp"
#include "imu_guard/ins.hpp"
#include "imu_guard/io.hpp"
#include "imu_guard/mitigate.hpp"
#include "imu_guard/parallel.hpp"
#include "imu_guard/pipeline.hpp"
#include "imu_guard/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <random>

namespace fs = std::filesystem;
using namespace imu_guard;
using ordered_json = nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, validation = 2, data = 3, internal = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return validation;
    default: return data;
  }
}

std::uint8_t parse_axes(const std::string& s) {
  std::uint8_t axes = 0;
  for (char c : s) {
    if (c == 'x') axes |= 1;
    else if (c == 'y') axes |= 2;
    else if (c == 'z') axes |= 4;
    else fail(ErrorKind::configuration, "axes must use letters x, y, z");
  }
  return axes;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(io::parse_double(item));
    } catch (const Error&) {
      fail(ErrorKind::configuration, "'" + text + "' is not a comma-separated number list");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

Vec3 parse_vec3(const std::string& text, const char* what) {
  const auto v = parse_list(text);
  if (v.size() != 3) fail(ErrorKind::configuration, std::string(what) + " needs 3 comma-separated values");
  return {v[0], v[1], v[2]};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

struct SimulateArgs {
  std::string preset = "n50_10";
  std::uint64_t seed = 1;
  std::size_t poses = 2000;
  std::string shape = "ellipse3d";
  double duration = 10.0;
  double imu_rate = 200.0;
  double acc_sigma = 0.1;
  double gyro_sigma = 0.01;
  double fraction = 0.01;
  std::size_t burst_len = 5;
  std::string axes = "z";
  bool no_gyro = false;
  fs::path out = "sim";
};

int run_simulate(const SimulateArgs& a) {
  sim::TrajectorySpec spec;
  spec.shape = sim::parse_shape(a.shape);
  spec.pose_count = a.poses;
  spec.duration = a.duration;
  spec.imu_rate = a.imu_rate;
  const auto truth = sim::generate_truth(spec);
  const NoiseSpec noise{a.acc_sigma, a.gyro_sigma, pipeline::derive_seed(a.seed, 1)};
  const auto clean = sim::synthesize_imu(truth, {}, noise, {}, a.imu_rate, !a.no_gyro);
  auto glitch = sim::preset(a.preset);
  glitch.affected_fraction = a.fraction;
  glitch.burst_len = a.burst_len;
  glitch.axes = parse_axes(a.axes);
  glitch.seed = pipeline::derive_seed(a.seed, 2);
  const auto corrupted = sim::inject_glitches(clean, glitch);
  ensure_dir(a.out);
  io::save_tum(a.out / "truth.tum", truth.trajectory());
  io::save_imu_csv(a.out / "clean.csv", clean);
  io::save_imu_csv(a.out / "corrupted.csv", corrupted.stream);
  io::write_text(a.out / "mask.json", sim::mask_to_json(corrupted, glitch));
  std::cout << "wrote " << clean.size() << " samples, "
            << std::count(corrupted.mask.begin(), corrupted.mask.end(), true) << " corrupted, to "
            << a.out.string() << "\n";
  return ok;
}

struct ExtractArgs {
  std::vector<std::string> inputs;
  std::string label = "default";
  std::size_t length = 10;
  std::size_t count = 10;
  std::size_t dims = 6;
  double gyro_weight = 1.0;
  bool zscore = false;
  std::size_t stride = 0;
  unsigned parallelism = 4;
  fs::path out = "templates.json";
};

int run_extract(const ExtractArgs& a) {
  std::vector<detect::Recording> recs;
  for (const auto& in : a.inputs) {
    // LABEL=PATH tags a recording; plain paths use --label.
    const auto eq = in.find('=');
    const bool tagged = eq != std::string::npos && !fs::exists(in);
    const std::string label = tagged ? in.substr(0, eq) : a.label;
    const fs::path path = tagged ? fs::path(in.substr(eq + 1)) : fs::path(in);
    recs.push_back({label, path.filename().string(), io::load_imu_csv(path)});
  }
  detect::ExtractionOptions opts{{a.dims, a.gyro_weight, a.zscore}, std::nullopt};
  if (a.stride > 0) opts.stride = a.stride;
  const auto lib = detect::extract_templates(recs, a.length, a.count, opts,
                                             effective_parallelism(a.parallelism));
  detect::save_library(a.out, lib);
  std::cout << "wrote " << lib.templates.size() << " templates to " << a.out.string() << "\n";
  return ok;
}

struct DetectArgs {
  fs::path input;
  std::string mode = "dtw";
  fs::path templates;
  double acc_threshold = 12.0;
  double dtw_threshold = 0.0;
  std::vector<std::string> validation;
  double target_pass = 0.99;
  double margin = 1.2;
  std::size_t slice_len = 40;
  unsigned parallelism = 4;
  fs::path mask;
  fs::path out = "report.jsonl";
};

int run_detect(const DetectArgs& a) {
  const auto stream = io::load_imu_csv(a.input);
  detect::DetectorConfig cfg;
  cfg.mode = detect::parse_mode(a.mode);
  cfg.acc_threshold = a.acc_threshold;
  cfg.slice_len = a.slice_len;
  cfg.parallelism = effective_parallelism(a.parallelism);
  if (cfg.mode == detect::Mode::dtw) {
    if (a.templates.empty()) fail(ErrorKind::configuration, "dtw mode needs --templates");
    cfg.templates = std::make_shared<const detect::TemplateLibrary>(detect::load_library(a.templates));
    cfg.dtw_threshold = a.dtw_threshold;
    if (cfg.dtw_threshold <= 0.0) {
      if (a.validation.empty()) {
        fail(ErrorKind::configuration, "dtw mode needs --dtw-threshold or --validation recordings");
      }
      std::vector<ImuStream> val;
      for (const auto& p : a.validation) val.push_back(io::load_imu_csv(p));
      const auto slices = detect::validation_slices(val, a.slice_len, cfg.templates->layout);
      cfg.dtw_threshold = detect::calibrate_dtw_threshold(*cfg.templates, slices, a.target_pass,
                                                          a.margin, cfg.parallelism);
    }
  }
  const auto report = detect::detect(stream, cfg);
  io::write_text(a.out, detect::report_to_jsonl(report));
  ordered_json summary;
  summary["mode"] = detect::to_string(report.mode);
  summary["threshold"] = report.threshold;
  std::size_t abnormal = 0;
  for (const auto& r : report.records) abnormal += r.verdict == detect::Verdict::abnormal;
  summary["abnormal_records"] = abnormal;
  if (!a.mask.empty() && report.mode == detect::Mode::dtw) {
    const auto score = detect::score_slices(report, sim::mask_from_json(io::read_text(a.mask)));
    summary["recall"] = score.recall();
    summary["false_positive_rate"] = score.false_positive_rate();
  }
  std::cout << summary.dump() << "\n";
  return ok;
}

struct MitigateArgs {
  fs::path input;
  fs::path report;
  fs::path templates;
  std::string mode;
  std::size_t window = 5;
  fs::path out = "cleaned.csv";
  fs::path log;
};

int run_mitigate(const MitigateArgs& a) {
  const auto stream = io::load_imu_csv(a.input);
  const auto report = detect::report_from_jsonl(io::read_text(a.report));
  mitigate::MitigationConfig cfg;
  if (!a.mode.empty()) {
    cfg.mode = mitigate::parse_mode(a.mode);
  } else {
    cfg.mode = report.mode == detect::Mode::dtw ? mitigate::Mode::template_substitution
                                                : mitigate::Mode::clamp;
  }
  cfg.window_n = a.window;
  mitigate::MitigationResult result;
  if (report.mode == detect::Mode::dtw) {
    if (cfg.mode != mitigate::Mode::template_substitution) {
      fail(ErrorKind::configuration, "a dtw report can only be mitigated by template_substitution");
    }
    if (a.templates.empty()) fail(ErrorKind::configuration, "template substitution needs --templates");
    result = mitigate::mitigate_dtw(stream, report, detect::load_library(a.templates), cfg);
  } else {
    result = mitigate::mitigate_threshold(stream, report, cfg);
  }
  io::save_imu_csv(a.out, result.stream);
  const fs::path log = a.log.empty() ? fs::path(a.out).replace_extension(".log.jsonl") : a.log;
  io::write_text(log, mitigate::log_to_jsonl(result.log));
  std::cout << "changed " << result.log.size() << " entries; wrote " << a.out.string() << "\n";
  return ok;
}

struct IntegrateArgs {
  fs::path input;
  std::string method = "midpoint";
  fs::path anchor;
  double anchor_period = 1.0;
  fs::path init;
  std::string bias;
  std::string init_velocity;
  fs::path out = "trajectory.tum";
};

int run_integrate(const IntegrateArgs& a) {
  const auto stream = io::load_imu_csv(a.input);
  if (stream.empty()) fail(ErrorKind::empty_input, "IMU stream is empty");
  ins::IntegratorConfig cfg;
  cfg.method = ins::parse_method(a.method);
  if (!a.bias.empty()) {
    const auto b = parse_list(a.bias);
    if (b.size() != 3 && b.size() != 6) fail(ErrorKind::configuration, "--bias needs 3 or 6 values");
    cfg.bias.acc = {b[0], b[1], b[2]};
    if (b.size() == 6) cfg.bias.gyro = {b[3], b[4], b[5]};
  }
  std::shared_ptr<const Trajectory> reference;
  if (!a.anchor.empty()) {
    reference = std::make_shared<const Trajectory>(io::load_tum(a.anchor));
    if (a.anchor_period > 0.0) {
      cfg.anchor_period = a.anchor_period;
      cfg.anchor_source = reference;
    }
  }
  NavState initial;
  initial.t = stream.front().t;
  const fs::path init = a.init.empty() ? a.anchor : a.init;
  if (!init.empty()) {
    initial = ins::initial_state(init == a.anchor && reference ? *reference : io::load_tum(init),
                                 stream.front().t);
  }
  if (!a.init_velocity.empty()) initial.v = parse_vec3(a.init_velocity, "--init-velocity");
  const auto trajectory = ins::integrate(initial, stream, cfg);
  io::save_tum(a.out, trajectory);
  std::cout << "wrote " << trajectory.size() << " poses to " << a.out.string() << "\n";
  return ok;
}

struct EvaluateArgs {
  fs::path est;
  fs::path ref;
  std::string align = "se3";
  std::string lengths = "7,14,21,28,35";
  double max_dt = 0.0;
  fs::path out_json;
  fs::path out_csv;
};

int run_evaluate(const EvaluateArgs& a) {
  eval::EvalConfig cfg;
  cfg.alignment = eval::parse_alignment(a.align);
  cfg.lengths = parse_list(a.lengths);
  if (a.max_dt > 0.0) cfg.max_dt = a.max_dt;
  const auto report = eval::evaluate(io::load_tum(a.est), io::load_tum(a.ref), cfg);
  const auto json = eval::report_to_json(report);
  if (!a.out_json.empty()) io::write_text(a.out_json, json);
  if (!a.out_csv.empty()) io::write_text(a.out_csv, eval::relative_errors_csv(report));
  for (double skipped : report.relative.skipped) {
    std::cerr << "warning: path shorter than " << skipped << " m, length skipped\n";
  }
  std::cout << json;
  return ok;
}

struct PipelineArgs {
  fs::path config;
  fs::path output_dir;
  std::int64_t seed = -1;
};

int run_pipeline_cmd(const PipelineArgs& a) {
  auto cfg = pipeline::load_config(a.config);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (cfg.output_dir.empty()) cfg.output_dir = "run";
  const auto result = pipeline::run_pipeline(cfg);
  std::cout << result.summary_json;
  return ok;
}

struct BenchArgs {
  std::size_t k = 10;
  std::size_t n = 40;
  std::size_t m = 40;
  std::size_t d = 3;
  std::vector<unsigned> parallelism{1, 2, 4, 8};
  std::size_t iterations = 200;
  std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a) {
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> normal;
  auto series = [&](std::size_t rows) {
    dtw::Series::Matrix mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(a.d));
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = normal(rng);
    return dtw::Series(std::move(mat));
  };
  std::vector<dtw::Series> templates;
  for (std::size_t i = 0; i < a.k; ++i) templates.push_back(series(a.n));
  const auto query = series(a.m);
  ordered_json out;
  out["k"] = a.k;
  out["N"] = a.n;
  out["M"] = a.m;
  out["d"] = a.d;
  out["iterations"] = a.iterations;
  out["results"] = ordered_json::array();
  std::optional<dtw::MatchResult> reference;
  double base_ms = 0.0;
  bool identical = true;
  for (unsigned p : a.parallelism) {
    const unsigned eff = effective_parallelism(p);
    dtw::MatchResult r = dtw::best_match(query, templates, eff);
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t it = 0; it < a.iterations; ++it) r = dtw::best_match(query, templates, eff);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() /
                      static_cast<double>(std::max<std::size_t>(a.iterations, 1));
    if (!reference) reference = r, base_ms = ms;
    identical = identical && r == *reference;
    out["results"].push_back({{"parallelism", p}, {"effective", eff}, {"ms_per_call", ms},
                              {"speedup", base_ms / ms}, {"template_index", r.template_index},
                              {"distance", r.distance}});
  }
  out["identical"] = identical;
  std::cout << out.dump(2) << "\n";
  return identical ? ok : internal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IMU glitch detection, mitigation and trajectory evaluation"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate truth, clean and corrupted IMU data");
  sim_cmd->add_option("--preset", sim_args.preset, "Glitch regime: n0_1, n1_10, n50_10");
  sim_cmd->add_option("--seed", sim_args.seed);
  sim_cmd->add_option("--poses", sim_args.poses, "Ground-truth pose count");
  sim_cmd->add_option("--shape", sim_args.shape, "ellipse3d, line or figure_eight");
  sim_cmd->add_option("--duration", sim_args.duration, "Seconds");
  sim_cmd->add_option("--imu-rate", sim_args.imu_rate, "Hz");
  sim_cmd->add_option("--acc-sigma", sim_args.acc_sigma);
  sim_cmd->add_option("--gyro-sigma", sim_args.gyro_sigma);
  sim_cmd->add_option("--fraction", sim_args.fraction, "Share of samples in glitch bursts");
  sim_cmd->add_option("--burst-len", sim_args.burst_len);
  sim_cmd->add_option("--axes", sim_args.axes, "Glitched axes, e.g. z or xz");
  sim_cmd->add_flag("--no-gyro", sim_args.no_gyro, "Accelerometer-only output");
  sim_cmd->add_option("-o,--out", sim_args.out, "Output directory");

  ExtractArgs ex_args;
  auto* ex_cmd = app.add_subcommand("extract-templates", "Build a template library from clean recordings");
  ex_cmd->add_option("inputs", ex_args.inputs, "IMU CSV files, optionally LABEL=PATH")->required();
  ex_cmd->add_option("--label", ex_args.label);
  ex_cmd->add_option("-N,--length", ex_args.length, "Template length in samples");
  ex_cmd->add_option("-k,--count", ex_args.count, "Number of templates");
  ex_cmd->add_option("--dims", ex_args.dims, "3 (accelerometer) or 6 (with gyro)");
  ex_cmd->add_option("--gyro-weight", ex_args.gyro_weight);
  ex_cmd->add_flag("--zscore", ex_args.zscore);
  ex_cmd->add_option("--stride", ex_args.stride, "Candidate spacing, default N");
  ex_cmd->add_option("--parallelism", ex_args.parallelism);
  ex_cmd->add_option("-o,--out", ex_args.out);

  DetectArgs det_args;
  auto* det_cmd = app.add_subcommand("detect", "Flag abnormal samples or slices");
  det_cmd->add_option("input", det_args.input, "IMU CSV")->required();
  det_cmd->add_option("--mode", det_args.mode, "threshold or dtw");
  det_cmd->add_option("--templates", det_args.templates);
  det_cmd->add_option("--acc-threshold", det_args.acc_threshold, "m/s^2 per axis");
  det_cmd->add_option("--dtw-threshold", det_args.dtw_threshold, "Omit to calibrate from --validation");
  det_cmd->add_option("--validation", det_args.validation, "Clean IMU CSVs for calibration");
  det_cmd->add_option("--target-pass", det_args.target_pass);
  det_cmd->add_option("--margin", det_args.margin);
  det_cmd->add_option("--slice-len", det_args.slice_len);
  det_cmd->add_option("--parallelism", det_args.parallelism);
  det_cmd->add_option("--mask", det_args.mask, "Fault mask JSON for scoring");
  det_cmd->add_option("-o,--out", det_args.out);

  MitigateArgs mit_args;
  auto* mit_cmd = app.add_subcommand("mitigate", "Replace flagged measurements");
  mit_cmd->add_option("input", mit_args.input, "IMU CSV")->required();
  mit_cmd->add_option("--report", mit_args.report)->required();
  mit_cmd->add_option("--templates", mit_args.templates);
  mit_cmd->add_option("--mode", mit_args.mode, "clamp, moving_average or template_substitution");
  mit_cmd->add_option("--window", mit_args.window, "moving_average predecessor count");
  mit_cmd->add_option("-o,--out", mit_args.out);
  mit_cmd->add_option("--log", mit_args.log);

  IntegrateArgs int_args;
  auto* int_cmd = app.add_subcommand("integrate", "Strapdown integration to a TUM trajectory");
  int_cmd->add_option("input", int_args.input, "IMU CSV")->required();
  int_cmd->add_option("--method", int_args.method, "euler or midpoint");
  int_cmd->add_option("--anchor", int_args.anchor, "Reference TUM for pose anchoring");
  int_cmd->add_option("--anchor-period", int_args.anchor_period, "Seconds; 0 disables anchoring");
  int_cmd->add_option("--init", int_args.init, "TUM giving the initial pose (default: --anchor)");
  int_cmd->add_option("--init-velocity", int_args.init_velocity, "vx,vy,vz");
  int_cmd->add_option("--bias", int_args.bias, "ax,ay,az[,gx,gy,gz]");
  int_cmd->add_option("-o,--out", int_args.out);

  EvaluateArgs ev_args;
  auto* ev_cmd = app.add_subcommand("evaluate", "ATE and relative errors against a reference");
  ev_cmd->add_option("estimate", ev_args.est, "Estimated TUM")->required();
  ev_cmd->add_option("reference", ev_args.ref, "Reference TUM")->required();
  ev_cmd->add_option("--align", ev_args.align, "se3, sim3, posyaw or none");
  ev_cmd->add_option("--lengths", ev_args.lengths, "Comma-separated metres");
  ev_cmd->add_option("--max-dt", ev_args.max_dt, "Association tolerance, seconds");
  ev_cmd->add_option("--json", ev_args.out_json);
  ev_cmd->add_option("--csv", ev_args.out_csv);

  PipelineArgs pl_args;
  auto* pl_cmd = app.add_subcommand("pipeline", "Run every variant end to end from a config file");
  pl_cmd->add_option("config", pl_args.config, "TOML or JSON config")->required();
  pl_cmd->add_option("-o,--output-dir", pl_args.output_dir);
  pl_cmd->add_option("--seed", pl_args.seed);

  BenchArgs b_args;
  auto* b_cmd = app.add_subcommand("bench-dtw", "Time best_match across parallelism levels");
  b_cmd->add_option("-k", b_args.k);
  b_cmd->add_option("-N", b_args.n);
  b_cmd->add_option("-M", b_args.m);
  b_cmd->add_option("-d", b_args.d);
  b_cmd->add_option("--parallelism", b_args.parallelism)->delimiter(',');
  b_cmd->add_option("--iterations", b_args.iterations);
  b_cmd->add_option("--seed", b_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : validation;
  }

  try {
    if (*sim_cmd) return run_simulate(sim_args);
    if (*ex_cmd) return run_extract(ex_args);
    if (*det_cmd) return run_detect(det_args);
    if (*mit_cmd) return run_mitigate(mit_args);
    if (*int_cmd) return run_integrate(int_args);
    if (*ev_cmd) return run_evaluate(ev_args);
    if (*pl_cmd) return run_pipeline_cmd(pl_args);
    if (*b_cmd) return run_bench(b_args);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return internal;
  }
  return internal;
}

#include "imu_guard/io.hpp"

#include "imu_guard/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace imu_guard::io {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorKind::parse, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_imu_csv(std::ostream& out, std::span<const ImuSample> stream) {
  const bool gyro = has_gyro(stream);
  out << (gyro ? "t,ax,ay,az,gx,gy,gz\n" : "t,ax,ay,az\n");
  for (const auto& s : stream) {
    out << format_double(s.t);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(s.acc[i]);
    if (gyro) {
      for (int i = 0; i < 3; ++i) out << ',' << format_double((*s.gyro)[i]);
    }
    out << '\n';
  }
}

ImuStream read_imu_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::parse, "IMU CSV: missing header");
  const auto header = trim(line);
  bool gyro = false;
  if (header == "t,ax,ay,az,gx,gy,gz") {
    gyro = true;
  } else if (header != "t,ax,ay,az") {
    fail(ErrorKind::parse, "IMU CSV: unexpected header '" + std::string(header) + "'");
  }
  const std::size_t cols = gyro ? 7 : 4;
  ImuStream stream;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != cols) {
      fail(ErrorKind::parse, "IMU CSV row " + std::to_string(row) + ": expected " +
                                 std::to_string(cols) + " fields");
    }
    ImuSample s;
    s.t = parse_double(fields[0]);
    for (int i = 0; i < 3; ++i) s.acc[i] = parse_double(fields[1 + i]);
    if (gyro) {
      Vec3 g;
      for (int i = 0; i < 3; ++i) g[i] = parse_double(fields[4 + i]);
      s.gyro = g;
    }
    stream.push_back(s);
  }
  validate_stream(stream);
  return stream;
}

void save_imu_csv(const std::filesystem::path& path, std::span<const ImuSample> stream) {
  auto out = open_out(path);
  write_imu_csv(out, stream);
}

ImuStream load_imu_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_imu_csv(in);
}

void write_tum(std::ostream& out, std::span<const NavState> trajectory) {
  for (const auto& s : trajectory) {
    out << format_double(s.t) << ' ' << format_double(s.p.x()) << ' '
        << format_double(s.p.y()) << ' ' << format_double(s.p.z()) << ' '
        << format_double(s.q.x()) << ' ' << format_double(s.q.y()) << ' '
        << format_double(s.q.z()) << ' ' << format_double(s.q.w()) << '\n';
  }
}

Trajectory read_tum(std::istream& in) {
  Trajectory traj;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<std::string_view> fields;
    for (auto f : split(body, ' ')) {
      if (!trim(f).empty()) fields.push_back(f);
    }
    if (fields.size() != 8) {
      fail(ErrorKind::parse, "TUM line " + std::to_string(row) + ": expected 8 fields");
    }
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_double(fields[i]);
    NavState s;
    s.t = v[0];
    s.p = Vec3(v[1], v[2], v[3]);
    s.q = Quaternion(v[7], v[4], v[5], v[6]).normalized();
    traj.push_back(s);
  }
  validate_trajectory(traj);
  return traj;
}

void save_tum(const std::filesystem::path& path, std::span<const NavState> trajectory) {
  auto out = open_out(path);
  write_tum(out, trajectory);
}

Trajectory load_tum(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tum(in);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace imu_guard::io

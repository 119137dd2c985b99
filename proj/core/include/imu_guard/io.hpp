#pragma once

#include "imu_guard/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

namespace imu_guard::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// IMU CSV: header `t,ax,ay,az[,gx,gy,gz]`, SI units, one sample per row.
void write_imu_csv(std::ostream& out, std::span<const ImuSample> stream);
ImuStream read_imu_csv(std::istream& in);
void save_imu_csv(const std::filesystem::path& path, std::span<const ImuSample> stream);
ImuStream load_imu_csv(const std::filesystem::path& path);

// TUM trajectory: `t x y z qx qy qz qw`, space separated, '#' comments.
// Velocity is not stored; loaded states carry v = 0.
void write_tum(std::ostream& out, std::span<const NavState> trajectory);
Trajectory read_tum(std::istream& in);
void save_tum(const std::filesystem::path& path, std::span<const NavState> trajectory);
Trajectory load_tum(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace imu_guard::io

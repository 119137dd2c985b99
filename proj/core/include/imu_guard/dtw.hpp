#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace imu_guard::dtw {

/// Time series of N rows (time steps) by d columns (channels).
class Series {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Throws ErrorKind::empty_input for zero rows or columns and
  /// ErrorKind::shape for non-finite entries.
  explicit Series(Matrix data);
  Series(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t length() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(data_.cols()); }
  const Matrix& data() const { return data_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dims(), dims()};
  }

 private:
  Matrix data_;
};

/// Squared Euclidean distance between two rows.
double point_cost(std::span<const double> p, std::span<const double> q);

/// Unconstrained DTW over squared step costs, computed with one rolling row
/// of M+1 cells. `p` is walked in the outer loop, `q` in the inner one.
double dtw_distance(const Series& p, const Series& q);

/// Same recurrence on the full (N+1)x(M+1) cost matrix. Slower; kept as a
/// reference implementation.
double dtw_distance_full(const Series& p, const Series& q);

/// Per-channel standardization (zero mean, unit variance). Constant channels
/// are only centred.
Series zscore(const Series& s);

struct MatchResult {
  std::size_t template_index = 0;
  double distance = 0.0;

  bool operator==(const MatchResult&) const = default;
};

/// Minimum-distance template for `query`; ties go to the lowest index.
/// The result does not depend on `parallelism`.
MatchResult best_match(const Series& query, std::span<const Series> templates,
                       unsigned parallelism = 1);

}  // namespace imu_guard::dtw

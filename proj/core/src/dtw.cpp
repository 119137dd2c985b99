#include "imu_guard/dtw.hpp"

#include "imu_guard/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace imu_guard::dtw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double cost(const double* a, const double* b, std::size_t d) {
  double sum = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    sum += diff * diff;
  }
  return sum;
}

void check_pair(const Series& p, const Series& q) {
  if (p.dims() != q.dims()) {
    fail(ErrorKind::shape, "dtw: dimension mismatch " + std::to_string(p.dims()) +
                               " vs " + std::to_string(q.dims()));
  }
}

}  // namespace

Series::Series(Matrix data) : data_(std::move(data)) {
  if (data_.rows() == 0 || data_.cols() == 0) {
    fail(ErrorKind::empty_input, "series must have at least one row and column");
  }
  if (!data_.allFinite()) fail(ErrorKind::shape, "series contains non-finite values");
}

Series::Series(std::initializer_list<std::initializer_list<double>> rows)
    : Series([&] {
        const auto n = static_cast<Eigen::Index>(rows.size());
        const auto d = n > 0 ? static_cast<Eigen::Index>(rows.begin()->size()) : 0;
        Matrix m(n, d);
        Eigen::Index r = 0;
        for (const auto& row : rows) {
          if (static_cast<Eigen::Index>(row.size()) != d) {
            fail(ErrorKind::shape, "ragged series rows");
          }
          Eigen::Index c = 0;
          for (double v : row) m(r, c++) = v;
          ++r;
        }
        return m;
      }()) {}

double point_cost(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorKind::shape, "point_cost: dimension mismatch");
  }
  return cost(p.data(), q.data(), p.size());
}

double dtw_distance(const Series& p, const Series& q) {
  check_pair(p, q);
  const std::size_t n = p.length();
  const std::size_t m = q.length();
  const std::size_t d = p.dims();

  thread_local std::vector<double> row;
  row.assign(m + 1, kInf);
  row[0] = 0.0;

  const double* pd = p.data().data();
  const double* qd = q.data().data();
  for (std::size_t level = 0; level < n; ++level) {
    double ul_corner = row[0];
    row[0] = kInf;
    const double* prow = pd + level * d;
    for (std::size_t i = 1; i <= m; ++i) {
      const double v =
          cost(prow, qd + (i - 1) * d, d) + std::min({ul_corner, row[i - 1], row[i]});
      ul_corner = row[i];
      row[i] = v;
    }
  }
  return row[m];
}

double dtw_distance_full(const Series& p, const Series& q) {
  check_pair(p, q);
  const std::size_t n = p.length();
  const std::size_t m = q.length();
  std::vector<double> table((n + 1) * (m + 1), kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return table[i * (m + 1) + j]; };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = point_cost(p.row(i - 1), q.row(j - 1)) +
                 std::min({at(i - 1, j - 1), at(i, j - 1), at(i - 1, j)});
    }
  }
  return at(n, m);
}

Series zscore(const Series& s) {
  Series::Matrix out = s.data();
  const double n = static_cast<double>(out.rows());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double mean = out.col(c).sum() / n;
    out.col(c).array() -= mean;
    const double sd = std::sqrt(out.col(c).squaredNorm() / n);
    if (sd > 0.0) out.col(c) /= sd;
  }
  return Series(std::move(out));
}

MatchResult best_match(const Series& query, std::span<const Series> templates,
                       unsigned parallelism) {
  if (templates.empty()) fail(ErrorKind::configuration, "best_match: no templates");
  for (const auto& t : templates) check_pair(t, query);

  auto scan = [&](std::size_t first, std::size_t stride) {
    MatchResult best{first, kInf};
    for (std::size_t i = first; i < templates.size(); i += stride) {
      const double dist = dtw_distance(templates[i], query);
      if (dist < best.distance) best = {i, dist};
    }
    return best;
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, parallelism), templates.size());
  if (workers == 1) return scan(0, 1);

  std::vector<MatchResult> partial(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      pool.emplace_back([&, w] { partial[w] = scan(w, workers); });
    }
    partial[0] = scan(0, workers);
  }
  MatchResult best = partial[0];
  for (std::size_t w = 1; w < workers; ++w) {
    const auto& c = partial[w];
    if (c.distance < best.distance ||
        (c.distance == best.distance && c.template_index < best.template_index)) {
      best = c;
    }
  }
  return best;
}

}  // namespace imu_guard::dtw

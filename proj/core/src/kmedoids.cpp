#include "imu_guard/kmedoids.hpp"

#include "imu_guard/error.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace imu_guard::kmedoids {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double total_cost(const Eigen::MatrixXd& dist, const std::vector<std::size_t>& medoids) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    double best = kInf;
    for (auto m : medoids) best = std::min(best, dist(i, static_cast<Eigen::Index>(m)));
    sum += best;
  }
  return sum;
}

}  // namespace

Clustering pam(const Eigen::MatrixXd& dist, std::size_t k, std::size_t max_iterations) {
  const auto n = static_cast<std::size_t>(dist.rows());
  if (dist.rows() != dist.cols()) fail(ErrorKind::shape, "pam: distance matrix not square");
  if (k == 0 || k > n) {
    fail(ErrorKind::insufficient_data,
         "pam: cannot pick " + std::to_string(k) + " medoids from " + std::to_string(n));
  }
  auto d = [&](std::size_t i, std::size_t j) {
    return dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  // BUILD: start from the point minimizing total distance, then add the point
  // with the largest cost reduction.
  std::vector<std::size_t> medoids;
  std::vector<double> nearest(n, kInf);
  std::vector<bool> chosen(n, false);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best_point = n;
    double best_cost = kInf;
    for (std::size_t c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += std::min(nearest[i], d(i, c));
      if (cost < best_cost) {
        best_cost = cost;
        best_point = c;
      }
    }
    chosen[best_point] = true;
    medoids.push_back(best_point);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, best_point));
  }

  // SWAP: apply the single best (medoid, non-medoid) exchange until none
  // helps. Costs use each point's nearest and second-nearest medoid.
  double current = total_cost(dist, medoids);
  std::vector<std::size_t> owner(n);
  std::vector<double> first(n), second(n);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      first[i] = kInf;
      second[i] = kInf;
      for (std::size_t slot = 0; slot < k; ++slot) {
        const double v = d(i, medoids[slot]);
        if (v < first[i]) {
          second[i] = first[i];
          first[i] = v;
          owner[i] = slot;
        } else if (v < second[i]) {
          second[i] = v;
        }
      }
    }
    double best_cost = current;
    std::size_t best_slot = k;
    std::size_t best_point = n;
    for (std::size_t slot = 0; slot < k; ++slot) {
      for (std::size_t c = 0; c < n; ++c) {
        if (chosen[c]) continue;
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double base = owner[i] == slot ? second[i] : first[i];
          cost += std::min(base, d(i, c));
        }
        if (cost < best_cost) {
          best_cost = cost;
          best_slot = slot;
          best_point = c;
        }
      }
    }
    // Relative tolerance stops oscillation on floating-point noise.
    if (best_slot == k || best_cost >= current - 1e-12 * std::max(1.0, current)) break;
    chosen[medoids[best_slot]] = false;
    chosen[best_point] = true;
    medoids[best_slot] = best_point;
    current = best_cost;
  }

  Clustering out;
  out.medoids = medoids;
  std::sort(out.medoids.begin(), out.medoids.end());
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < k; ++m) {
      if (d(i, out.medoids[m]) < d(i, out.medoids[best])) best = m;
    }
    out.assignment[i] = best;
  }
  out.total_cost = total_cost(dist, out.medoids);
  return out;
}

}  // namespace imu_guard::kmedoids

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace imu_guard::kmedoids {

struct Clustering {
  /// Indices into the distance matrix, ascending.
  std::vector<std::size_t> medoids;
  /// Medoid position (into `medoids`) for every point.
  std::vector<std::size_t> assignment;
  double total_cost = 0.0;
};

/// Partitioning Around Medoids (greedy BUILD, then best-improvement SWAP)
/// over a symmetric precomputed distance matrix. Deterministic: ties resolve
/// to the lowest index.
Clustering pam(const Eigen::MatrixXd& distances, std::size_t k,
               std::size_t max_iterations = 100);

}  // namespace imu_guard::kmedoids

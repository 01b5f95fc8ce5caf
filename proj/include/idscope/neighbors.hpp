#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "idscope/point_cloud.hpp"

namespace idscope {

using IndexMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sorted Euclidean nearest-neighbor distances: dists(i, j) = T_{j+1}(x_i), self excluded.
struct NeighborTable {
  Matrix dists;
  std::optional<IndexMatrix> idx;
  /// Set when some point has a neighbor at distance zero (exact duplicates).
  bool zero_distance_neighbors = false;
  /// Ambient dimension of the source cloud, 0 when unknown.
  std::size_t ambient_dim = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(dists.rows()); }
  std::size_t max_order() const noexcept { return static_cast<std::size_t>(dists.cols()); }
  double T(std::size_t point, std::size_t order) const {
    return dists(static_cast<Eigen::Index>(point), static_cast<Eigen::Index>(order - 1));
  }
};

/// Builds a table straight from distances (e.g. tables assembled in tests or
/// ingested from elsewhere). Rows must be nondecreasing and nonnegative.
NeighborTable make_neighbor_table(Matrix dists);

/// Squared Euclidean distance summed in index order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Exact k-NN: every returned distance is the square root of squared_distance
/// for the selected pair, and the selection is the K smallest by
/// (distance, index). Throws TooFewPoints when n <= K.
NeighborTable knn_distances(const PointCloud& cloud, std::size_t k, bool keep_indices = true);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;     ///< sample standard deviation (n - 1 denominator)
  double std_error = 0.0;  ///< std / sqrt(count)
  std::size_t count = 0;
};

/// Mean/std/stderr of the cosine similarity over all unordered pairs of distinct
/// rows, computed on raw (uncentered) vectors in blocks of `block` rows.
SummaryStats pairwise_cosine_mean(const PointCloud& cloud, std::size_t block = 1024);

SummaryStats norm_profile(const PointCloud& cloud);

struct OrderProfile {
  std::size_t order = 0;
  SummaryStats stats;
};

std::vector<OrderProfile> knn_profile(const NeighborTable& table, std::span<const std::size_t> orders);

SummaryStats summarize(std::span<const double> values);

}  // namespace idscope

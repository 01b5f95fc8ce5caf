#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "idscope/point_cloud.hpp"

namespace idscope {

/// n i.i.d. points uniform in the unit ball of R^dim (Gaussian direction, radius U^(1/dim)).
PointCloud sample_uniform_ball(std::size_t dim, std::size_t n, std::uint64_t seed);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix drawn column by
/// column, with signs fixed so that R has a positive diagonal.
Matrix random_orthogonal(std::size_t dim, std::uint64_t seed);

/// First `cols` columns of random_orthogonal(dim, seed), computed from a thin QR.
Matrix random_orthonormal_columns(std::size_t dim, std::size_t cols, std::uint64_t seed);

/// Zero-pads to `ambient` columns; with `rotate`, maps every row through a random
/// orthogonal matrix of size ambient. Only the occupied columns of that matrix
/// are materialized, so large ambient sizes stay cheap.
PointCloud embed_ambient(const PointCloud& cloud, std::size_t ambient, bool rotate, std::uint64_t seed);

enum class ManifoldKind { UniformBall, UnionOfBalls, FiniteVocabulary };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::UniformBall;
  std::vector<std::size_t> intrinsic_dims{2};
  std::size_t ambient_dim = 2;
  std::vector<std::size_t> n_points{1000};
  /// Per-component translation (length <= ambient_dim, zero-filled). Empty selects 4 * i along the first axis.
  std::vector<std::vector<double>> offsets;
  bool rotate = false;
  std::uint64_t seed = 0;
  std::size_t vocabulary_size = 0;

  void validate() const;
};

/// Labeled union of unit balls, component i labeled "i". Throws OverlappingComponents
/// unless every pair of offsets is more than 2 apart.
PointCloud sample_union(const ManifoldSpec& spec);

/// V standard-Gaussian atoms in R^ambient, n draws with replacement.
PointCloud sample_finite_vocabulary(std::size_t vocabulary, std::size_t ambient, std::size_t n, std::uint64_t seed);

PointCloud generate(const ManifoldSpec& spec);

}  // namespace idscope

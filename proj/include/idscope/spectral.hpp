#pragma once

#include <cstddef>
#include <span>

#include "idscope/point_cloud.hpp"

namespace idscope {

/// Eigenvalues below this fraction of the largest count as zero.
inline constexpr double kEigenCutoff = 1e-12;

enum class SpectrumRoute {
  SingularValues,  ///< squared singular values of Z (default)
  Gram,            ///< eigenvalues of the explicit n x n matrix Z Z^T
};

struct SpectralSummary {
  double entropy = 0.0;         ///< von Neumann entropy in nats
  double effective_rank = 1.0;  ///< exp of the entropy of normalized singular values
  std::size_t rank = 0;         ///< eigenvalues kept after the cutoff
  bool all_zero = false;        ///< (centered) data identically zero; entropy defined as 0
};

/// Nonzero Gram eigenvalues of the (optionally column-centered) data, descending.
Eigen::VectorXd gram_spectrum(const PointCloud& cloud, bool center, SpectrumRoute route = SpectrumRoute::SingularValues);

/// -sum p_i log p_i over p = eigenvalues / sum, with 0 log 0 = 0.
double spectral_entropy(std::span<const double> eigenvalues);

SpectralSummary von_neumann_entropy(const PointCloud& cloud, bool center = true,
                                    SpectrumRoute route = SpectrumRoute::SingularValues);

double effective_rank(const PointCloud& cloud, bool center = true);

}  // namespace idscope

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "idscope/estimators.hpp"
#include "idscope/neighbors.hpp"
#include "idscope/point_cloud.hpp"
#include "idscope/spectral.hpp"

namespace idscope {

struct LayerMetricsConfig {
  std::vector<std::size_t> gride_scales = kDefaultGrideScales;
  std::vector<std::size_t> knn_orders{1, 2, 4, 8, 16, 32, 64};
  double twonn_discard = kDefaultDiscardFraction;
  double d_max = 0.0;
  std::size_t cosine_block = 1024;
  bool center_spectrum = true;
  bool exclude_last = false;
  /// Interior query points (chosen on layer 0) for the pointwise oracle; 0 disables it.
  std::size_t oracle_queries = 50;
  std::uint64_t oracle_seed = 0;
  PointwiseOptions oracle = fine_scale_oracle();
};

struct LayerMetricsRow {
  std::size_t layer = 0;
  std::string name;
  double relative_depth = 0.0;
  MultiscaleEstimate gride;
  double twonn = 0.0;
  std::vector<OrderProfile> knn;
  SummaryStats cosine;
  SummaryStats norm;
  SpectralSummary spectrum;
  std::optional<double> oracle;
  double duplicate_fraction = 0.0;
};

std::vector<LayerMetricsRow> layer_metrics(const LayerStack& stack, const LayerMetricsConfig& cfg = {});

/// Header row plus one line per layer. Columns: layer, name, relative_depth,
/// gride_mean, gride_k<s>..., twonn, knn<o>_mean, knn<o>_std..., cos_mean, cos_std,
/// cos_stderr, norm_mean, norm_std, norm_stderr, entropy, effective_rank, rank,
/// oracle, duplicate_fraction.
void write_layer_metrics_csv(std::ostream& out, const std::vector<LayerMetricsRow>& rows, const LayerMetricsConfig& cfg);

}  // namespace idscope

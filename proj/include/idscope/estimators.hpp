#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idscope/neighbors.hpp"
#include "idscope/point_cloud.hpp"

namespace idscope {

enum class Method { Mle, TwoNnMle, TwoNnRegression, Gride, PointwiseOracle };

std::string_view to_string(Method m);

/// A global intrinsic-dimension estimate with the parameters that produced it.
struct IdEstimate {
  Method method = Method::TwoNnMle;
  double value = 0.0;
  double std_error = 0.0;
  /// Local estimates d(x_i) for the retained points, when the method defines them.
  std::vector<double> per_point;
  std::map<std::string, double> params;
  std::size_t used_points = 0;
  /// Points removed because their first neighbor sits at distance zero.
  std::size_t dropped_duplicates = 0;
  /// Likelihood still increasing at d_max; `value` is the boundary.
  bool boundary_hit = false;
};

enum class ZeroDistancePolicy { Drop, Error };

enum class MleAggregation {
  InverseMeanInverse,  ///< [mean_i 1/d(x_i)]^-1, i.e. pooled log-ratios
  ArithmeticMean,      ///< mean_i d(x_i)
};

struct MleOptions {
  MleAggregation aggregation = MleAggregation::InverseMeanInverse;
  ZeroDistancePolicy zero_policy = ZeroDistancePolicy::Drop;
};

IdEstimate estimate_mle(const NeighborTable& table, std::size_t k, const MleOptions& opts = {});

inline constexpr double kDefaultDiscardFraction = 0.1;

/// TwoNN maximum likelihood. The ceil(f n) largest ratios are treated as
/// right-censored at the largest retained ratio, so trimming does not bias the
/// Pareto fit; f = 0 is the plain inverse mean log-ratio.
IdEstimate estimate_twonn_mle(const NeighborTable& table, double discard_fraction = kDefaultDiscardFraction,
                              ZeroDistancePolicy policy = ZeroDistancePolicy::Drop);
IdEstimate twonn_mle_from_ratios(std::span<const double> ratios, double discard_fraction);

/// TwoNN through-origin regression of -log(1 - F_emp) on log(rho).
IdEstimate estimate_twonn_regression(const NeighborTable& table, double discard_fraction = kDefaultDiscardFraction,
                                     ZeroDistancePolicy policy = ZeroDistancePolicy::Drop);
IdEstimate twonn_regression_from_ratios(std::span<const double> ratios, double discard_fraction);

/// Gride on ratios mu = T_{2k} / T_k, pooled likelihood maximized over (0, d_max].
/// d_max <= 0 selects 10 * ambient dimension of the table (or 1000 if unknown).
IdEstimate estimate_gride(const NeighborTable& table, std::size_t k, double d_max = 0.0,
                          ZeroDistancePolicy policy = ZeroDistancePolicy::Drop);
IdEstimate gride_from_ratios(std::span<const double> ratios, std::size_t k, double d_max);

/// Log-density of one ratio mu >= 1 under the Gride model of order k.
double gride_log_density(double mu, double d, std::size_t k);

struct MultiscaleEstimate {
  std::vector<IdEstimate> per_scale;
  double average = 0.0;
};

inline const std::vector<std::size_t> kDefaultGrideScales{1, 2, 4, 8, 16, 32};

MultiscaleEstimate gride_multiscale(const NeighborTable& table,
                                    std::span<const std::size_t> scales = kDefaultGrideScales, double d_max = 0.0);

struct PointwiseOptions {
  /// Explicit radius grid; empty selects the default grid.
  std::vector<double> radii;
  std::size_t grid_size = 8;
  /// Grid ends as quantiles of the distances from the query.
  double low_quantile = 0.02;
  double high_quantile = 0.20;
  /// The largest default ball holds at least this many neighbors, so small
  /// samples still get a usable grid.
  std::size_t min_outer_count = 10;
};

/// A tenfold smaller radius window (0.2% to 2% of the mass) for comparing the
/// same query points across layers: nonlinear maps bend the data at the scale
/// of the default window, which biases slopes upward, while the quantity being
/// compared is a small-r limit. Costs per-point precision; average over queries.
inline PointwiseOptions fine_scale_oracle() {
  PointwiseOptions o;
  o.low_quantile = 0.002;
  o.high_quantile = 0.02;
  return o;
}

/// Slope of log(count / n) against log(r) over a radius grid around one point.
/// Counts exclude the point itself; radii enclosing fewer than two points are dropped.
IdEstimate estimate_pointwise_dimension(const PointCloud& cloud, std::size_t index, const PointwiseOptions& opts = {});

/// Mean pointwise slope over several query points.
IdEstimate pointwise_dimension_mean(const PointCloud& cloud, std::span<const std::size_t> indices,
                                    const PointwiseOptions& opts = {});

inline constexpr double kDefaultInteriorFraction = 0.25;
/// `count` seeded random indices (ascending) drawn from the pool_fraction of
/// points closest to the centroid.
std::vector<std::size_t> interior_points(const PointCloud& cloud, std::size_t count, std::uint64_t seed = 0,
                                         double pool_fraction = kDefaultInteriorFraction);

enum class SupportVerdict { Continuous, FiniteSupportSuspected };

std::string_view to_string(SupportVerdict v);

struct SupportDiagnosis {
  double duplicate_fraction = 0.0;
  SupportVerdict verdict = SupportVerdict::Continuous;
};

inline constexpr double kDefaultSupportThreshold = 0.01;

SupportDiagnosis diagnose_support(const NeighborTable& table, double threshold = kDefaultSupportThreshold);

/// One estimator with its parameters, as driven from configs and the CLI.
struct EstimatorConfig {
  Method method = Method::TwoNnMle;
  std::size_t k = 20;  ///< neighbors for MLE, scale for Gride
  double discard_fraction = kDefaultDiscardFraction;
  double d_max = 0.0;
  MleAggregation aggregation = MleAggregation::InverseMeanInverse;

  /// Neighbor order the table must provide.
  std::size_t required_order() const;
  std::string label() const;
};

IdEstimate run_estimator(const EstimatorConfig& cfg, const NeighborTable& table);

/// Parses "twonn", "twonn-reg", "mle:k=20", "gride:k=2", "twonn:f=0".
EstimatorConfig parse_estimator(std::string_view text);

}  // namespace idscope

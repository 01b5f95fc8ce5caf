#include <algorithm>
#include <cmath>
#include <numeric>

#include "idscope/error.hpp"
#include "idscope/estimators.hpp"
#include "idscope/rng.hpp"

namespace idscope {

namespace {

std::vector<double> distances_from(const PointCloud& cloud, std::size_t index) {
  const std::size_t dim = cloud.dim();
  const double* q = cloud.data().data() + index * dim;
  std::vector<double> out;
  out.reserve(cloud.size() - 1);
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (j == index) continue;
    const double* r = cloud.data().data() + j * dim;
    out.push_back(std::sqrt(squared_distance({q, dim}, {r, dim})));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  std::vector<double> grid(count);
  const double step = count > 1 ? std::log(hi / lo) / static_cast<double>(count - 1) : 0.0;
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

std::vector<double> default_radii(const std::vector<double>& sorted, const PointwiseOptions& opts) {
  const auto first_pos = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
  if (first_pos != sorted.begin()) {
    // The point is an atom: resolve it below the gap to the nearest distinct point,
    // where every ball holds exactly its copies.
    const double gap = first_pos == sorted.end() ? 1.0 : *first_pos;
    return geometric_grid(gap * 1e-3, gap * 0.5, opts.grid_size);
  }
  const auto index = [&](double q) {
    return static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size())));
  };
  const std::size_t last = sorted.size() - 1;
  const double lo = sorted[std::min(index(opts.low_quantile), last)];
  const double hi = sorted[std::min(std::max(index(opts.high_quantile), std::max<std::size_t>(opts.min_outer_count, 1) - 1), last)];
  if (!(hi > lo)) throw Error(ErrorCode::EmptyBall, "radius quantiles coincide; no usable radius grid");
  return geometric_grid(lo, hi, opts.grid_size);
}

}  // namespace

IdEstimate estimate_pointwise_dimension(const PointCloud& cloud, std::size_t index, const PointwiseOptions& opts) {
  if (index >= cloud.size()) throw Error(ErrorCode::InvalidArgument, "query index out of range");
  if (cloud.size() < 3) throw Error(ErrorCode::TooFewPoints, "pointwise dimension needs at least three points");
  if (opts.grid_size < 2) throw Error(ErrorCode::InvalidArgument, "radius grid needs at least two radii");
  if (!cloud.all_finite()) throw Error(ErrorCode::NonFinite, "cloud contains NaN or Inf");

  const std::vector<double> dists = distances_from(cloud, index);
  const std::vector<double> radii = opts.radii.empty() ? default_radii(dists, opts) : opts.radii;

  std::vector<double> xs, counts;
  for (double r : radii) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radii must be positive");
    const auto c = static_cast<double>(std::upper_bound(dists.begin(), dists.end(), r) - dists.begin());
    if (c < 2.0) continue;
    xs.push_back(std::log(r));
    counts.push_back(c);
  }
  if (xs.size() < 2) throw Error(ErrorCode::EmptyBall, "fewer than two radii enclose at least two points");

  // log(count/n) relative to the first usable radius: n cancels, and equal
  // counts give an exactly zero response.
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = counts[i] == counts[0] ? 0.0 : std::log(counts[i] / counts[0]);

  const double m = static_cast<double>(xs.size());
  const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::EmptyBall, "radius grid has no spread");

  IdEstimate est;
  est.method = Method::PointwiseOracle;
  est.value = sxy / sxx;
  if (xs.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double res = ys[i] - ybar - est.value * (xs[i] - xbar);
      rss += res * res;
    }
    est.std_error = std::sqrt(rss / (m - 2.0) / sxx);
  }
  est.used_points = 1;
  est.params = {{"index", static_cast<double>(index)},
                {"radii", m},
                {"r_min", std::exp(xs.front())},
                {"r_max", std::exp(xs.back())}};
  return est;
}

IdEstimate pointwise_dimension_mean(const PointCloud& cloud, std::span<const std::size_t> indices,
                                    const PointwiseOptions& opts) {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "no query points");
  IdEstimate est;
  est.method = Method::PointwiseOracle;
  est.per_point.reserve(indices.size());
  for (std::size_t idx : indices) est.per_point.push_back(estimate_pointwise_dimension(cloud, idx, opts).value);
  const SummaryStats s = summarize(est.per_point);
  est.value = s.mean;
  est.std_error = s.std_error;
  est.used_points = indices.size();
  est.params = {{"queries", static_cast<double>(indices.size())},
                {"low_quantile", opts.low_quantile},
                {"high_quantile", opts.high_quantile}};
  return est;
}

std::vector<std::size_t> interior_points(const PointCloud& cloud, std::size_t count, std::uint64_t seed,
                                         double pool_fraction) {
  if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "pool fraction must lie in (0, 1]");
  }
  const Eigen::RowVectorXd center = cloud.data().colwise().mean();
  std::vector<std::pair<double, std::size_t>> order(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) order[i] = {(cloud.row(i) - center).squaredNorm(), i};
  std::sort(order.begin(), order.end());
  const auto pool = std::max<std::size_t>(
      std::min(count, cloud.size()), static_cast<std::size_t>(std::ceil(pool_fraction * static_cast<double>(cloud.size()))));
  // Partial Fisher-Yates over the pool.
  Rng rng(seed);
  count = std::min(count, pool);
  for (std::size_t i = 0; i < count; ++i) std::swap(order[i], order[i + rng.below(pool - i)]);
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = order[i].second;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace idscope

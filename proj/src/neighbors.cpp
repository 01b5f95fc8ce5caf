#include "idscope/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "idscope/error.hpp"

namespace idscope {

namespace {

// Candidate screening computes squared distances as |q|^2 + |r|^2 - 2 q.r with
// a GEMM on centered data. Its deviation from the sequential exact sum is
// bounded by c * (D + 8) * eps * (|q| + |r|)^2; the constant is a generous
// multiple of the textbook dot-product error bound.
constexpr double kScreenSlack = 8.0 * std::numeric_limits<double>::epsilon();

std::size_t query_block_size(std::size_t n) {
  const std::size_t budget = std::size_t{1} << 22;  // doubles of screening buffer
  return std::clamp<std::size_t>(budget / std::max<std::size_t>(n, 1), 8, 512);
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

NeighborTable make_neighbor_table(Matrix dists) {
  NeighborTable t;
  for (Eigen::Index i = 0; i < dists.rows(); ++i) {
    for (Eigen::Index j = 0; j < dists.cols(); ++j) {
      const double v = dists(i, j);
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "neighbor distances must be finite and >= 0");
      if (j > 0 && v < dists(i, j - 1)) throw Error(ErrorCode::InvalidArgument, "neighbor distances must be sorted");
    }
    if (dists.cols() > 0 && dists(i, 0) == 0.0) t.zero_distance_neighbors = true;
  }
  t.dists = std::move(dists);
  return t;
}

NeighborTable knn_distances(const PointCloud& cloud, std::size_t k, bool keep_indices) {
  const std::size_t n = cloud.size();
  const std::size_t dim = cloud.dim();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be positive");
  if (n <= k) {
    throw Error(ErrorCode::TooFewPoints, "need more than K=" + std::to_string(k) + " points, got " + std::to_string(n));
  }
  if (!cloud.all_finite()) throw Error(ErrorCode::NonFinite, "cloud contains NaN or Inf");

  const Matrix& x = cloud.data();
  const Eigen::RowVectorXd center = x.colwise().mean();
  const Matrix xc = x.rowwise() - center;
  const Eigen::VectorXd sq_norm = xc.rowwise().squaredNorm();
  const Eigen::VectorXd norm = sq_norm.cwiseSqrt() * (1.0 + 1e-10);
  const double slack = kScreenSlack * static_cast<double>(dim + 8);

  NeighborTable table;
  table.dists.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  IndexMatrix idx(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));

  const std::size_t qb = query_block_size(n);
  const std::size_t num_blocks = (n + qb - 1) / qb;
  bool any_zero = false;

#pragma omp parallel for schedule(dynamic) reduction(|| : any_zero)
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const auto q0 = static_cast<Eigen::Index>(b * qb);
    const auto rows = static_cast<Eigen::Index>(std::min(qb, n - b * qb));
    Matrix screen = xc.middleRows(q0, rows) * xc.transpose();

    // Max-heap of the K smallest upper bounds seen so far.
    std::vector<double> heap;
    heap.reserve(k);
    std::vector<std::pair<double, std::int64_t>> cand;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index qi = q0 + r;
      const double* qp = x.data() + qi * x.cols();
      double* srow = screen.data() + r * screen.cols();
      heap.clear();
      for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double approx = sq_norm[qi] + sq_norm[jj] - 2.0 * srow[j];
        srow[j] = approx;
        if (jj == qi) continue;
        const double s = norm[qi] + norm[jj];
        const double upper = approx + slack * s * s;
        if (heap.size() < k) {
          heap.push_back(upper);
          std::push_heap(heap.begin(), heap.end());
        } else if (upper < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = upper;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      const double bound = heap.front();

      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<Eigen::Index>(j) == qi) continue;
        const double s = norm[qi] + norm[static_cast<Eigen::Index>(j)];
        if (srow[j] - slack * s * s <= bound) {
          const double* rp = x.data() + static_cast<Eigen::Index>(j) * x.cols();
          cand.emplace_back(squared_distance({qp, dim}, {rp, dim}), static_cast<std::int64_t>(j));
        }
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
      for (std::size_t c = 0; c < k; ++c) {
        table.dists(qi, static_cast<Eigen::Index>(c)) = std::sqrt(cand[c].first);
        idx(qi, static_cast<Eigen::Index>(c)) = cand[c].second;
      }
      if (cand[0].first == 0.0) any_zero = true;
    }
  }

  table.zero_distance_neighbors = any_zero;
  table.ambient_dim = dim;
  if (keep_indices) table.idx = std::move(idx);
  return table;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.std_error = s.std / std::sqrt(static_cast<double>(values.size()));
  return s;
}

SummaryStats pairwise_cosine_mean(const PointCloud& cloud, std::size_t block) {
  const std::size_t n = cloud.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "cosine similarity needs at least two rows");
  if (block < 1) throw Error(ErrorCode::InvalidArgument, "block size must be positive");
  if (!cloud.all_finite()) throw Error(ErrorCode::NonFinite, "cloud contains NaN or Inf");

  Matrix unit = cloud.data();
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double nr = unit.row(i).norm();
    if (nr == 0.0) throw Error(ErrorCode::ZeroNormRow, "row " + std::to_string(i) + " has zero norm");
    unit.row(i) /= nr;
  }

  const std::size_t nb = (n + block - 1) / block;
  // Per block-pair partial sums, reduced afterwards in a fixed order.
  std::vector<double> sums(nb * nb, 0.0), sumsqs(nb * nb, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t bi = 0; bi < nb; ++bi) {
    const auto i0 = static_cast<Eigen::Index>(bi * block);
    const auto ni = static_cast<Eigen::Index>(std::min(block, n - bi * block));
    for (std::size_t bj = bi; bj < nb; ++bj) {
      const auto j0 = static_cast<Eigen::Index>(bj * block);
      const auto nj = static_cast<Eigen::Index>(std::min(block, n - bj * block));
      const Matrix g = unit.middleRows(i0, ni) * unit.middleRows(j0, nj).transpose();
      double s = 0.0, ss = 0.0;
      for (Eigen::Index a = 0; a < ni; ++a) {
        for (Eigen::Index c = (bi == bj ? a + 1 : 0); c < nj; ++c) {
          const double v = g(a, c);
          s += v;
          ss += v * v;
        }
      }
      sums[bi * nb + bj] = s;
      sumsqs[bi * nb + bj] = ss;
    }
  }

  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double total_sq = std::accumulate(sumsqs.begin(), sumsqs.end(), 0.0);
  SummaryStats out;
  out.count = static_cast<std::size_t>(pairs);
  out.mean = total / pairs;
  if (pairs > 1.0) {
    const double var = std::max(0.0, (total_sq - pairs * out.mean * out.mean) / (pairs - 1.0));
    out.std = std::sqrt(var);
  }
  out.std_error = out.std / std::sqrt(pairs);
  return out;
}

SummaryStats norm_profile(const PointCloud& cloud) {
  std::vector<double> norms(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) norms[i] = cloud.row(i).norm();
  return summarize(norms);
}

std::vector<OrderProfile> knn_profile(const NeighborTable& table, std::span<const std::size_t> orders) {
  std::vector<OrderProfile> out;
  out.reserve(orders.size());
  std::vector<double> column(table.size());
  for (std::size_t order : orders) {
    if (order < 1 || order > table.max_order()) {
      throw Error(ErrorCode::OrderOutOfRange,
                  "order " + std::to_string(order) + " outside [1, " + std::to_string(table.max_order()) + "]");
    }
    for (std::size_t i = 0; i < table.size(); ++i) column[i] = table.T(i, order);
    out.push_back({order, summarize(column)});
  }
  return out;
}

}  // namespace idscope

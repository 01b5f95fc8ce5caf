#include "idscope/layer_metrics.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <limits>

#include "idscope/error.hpp"

namespace idscope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs f, mapping the listed data conditions to "undefined" instead of failing
// the whole analysis: a layer that is all duplicates has no ID estimate, and a
// zero row has no cosine.
template <typename F>
bool defined(F&& f, ErrorCode undefined_when) {
  try {
    f();
    return true;
  } catch (const Error& e) {
    if (e.code() != undefined_when) throw;
    return false;
  }
}

LayerMetricsRow measure_layer(const LayerStack& stack, std::size_t l, std::size_t order,
                              const std::vector<std::size_t>& queries, const LayerMetricsConfig& cfg) {
  const PointCloud& cloud = stack.layer(l);
  LayerMetricsRow row;
  row.layer = l;
  row.name = stack.info(l).name;
  row.relative_depth = stack.info(l).relative_depth;

  const NeighborTable table = knn_distances(cloud, order, false);
  row.duplicate_fraction = diagnose_support(table).duplicate_fraction;
  if (!defined([&] { row.gride = gride_multiscale(table, cfg.gride_scales, cfg.d_max); }, ErrorCode::ZeroDistance)) {
    row.gride.average = kNaN;
    for (auto s : cfg.gride_scales) {
      IdEstimate e;
      e.method = Method::Gride;
      e.value = kNaN;
      e.params = {{"k", static_cast<double>(s)}};
      row.gride.per_scale.push_back(e);
    }
  }
  if (!defined([&] { row.twonn = estimate_twonn_mle(table, cfg.twonn_discard).value; }, ErrorCode::ZeroDistance)) {
    row.twonn = kNaN;
  }
  row.knn = knn_profile(table, cfg.knn_orders);
  if (!defined([&] { row.cosine = pairwise_cosine_mean(cloud, cfg.cosine_block); }, ErrorCode::ZeroNormRow)) {
    row.cosine = {kNaN, kNaN, kNaN, 0};
  }
  row.norm = norm_profile(cloud);
  row.spectrum = von_neumann_entropy(cloud, cfg.center_spectrum);
  if (!queries.empty()) row.oracle = pointwise_dimension_mean(cloud, queries, cfg.oracle).value;
  return row;
}

}  // namespace

std::vector<LayerMetricsRow> layer_metrics(const LayerStack& stack, const LayerMetricsConfig& cfg) {
  std::size_t count = stack.num_layers();
  if (cfg.exclude_last && count > 1) --count;

  std::size_t order = 2;
  for (auto s : cfg.gride_scales) order = std::max(order, 2 * s);
  for (auto o : cfg.knn_orders) order = std::max(order, o);

  std::vector<std::size_t> queries;
  if (cfg.oracle_queries > 0) queries = interior_points(stack.layer(0), cfg.oracle_queries, cfg.oracle_seed);

  std::vector<LayerMetricsRow> rows(count);
  std::vector<std::exception_ptr> failures(count);
  // Layers are independent; each metric is itself deterministic.
#pragma omp parallel for schedule(dynamic) if (count > 1)
  for (std::size_t l = 0; l < count; ++l) {
    try {
      rows[l] = measure_layer(stack, l, order, queries, cfg);
    } catch (...) {
      failures[l] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return rows;
}

void write_layer_metrics_csv(std::ostream& out, const std::vector<LayerMetricsRow>& rows, const LayerMetricsConfig& cfg) {
  out << "layer,name,relative_depth,gride_mean";
  for (auto s : cfg.gride_scales) out << ",gride_k" << s;
  out << ",twonn";
  for (auto o : cfg.knn_orders) out << ",knn" << o << "_mean,knn" << o << "_std";
  out << ",cos_mean,cos_std,cos_stderr,norm_mean,norm_std,norm_stderr,entropy,effective_rank,rank,oracle,"
         "duplicate_fraction\n";

  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.layer << ',' << r.name << ',' << r.relative_depth << ',' << r.gride.average;
    for (const auto& e : r.gride.per_scale) out << ',' << e.value;
    out << ',' << r.twonn;
    for (const auto& k : r.knn) out << ',' << k.stats.mean << ',' << k.stats.std;
    out << ',' << r.cosine.mean << ',' << r.cosine.std << ',' << r.cosine.std_error;
    out << ',' << r.norm.mean << ',' << r.norm.std << ',' << r.norm.std_error;
    out << ',' << r.spectrum.entropy << ',' << r.spectrum.effective_rank << ',' << r.spectrum.rank << ',';
    if (r.oracle) out << *r.oracle;
    out << ',' << r.duplicate_fraction << '\n';
  }
  out.precision(old_precision);
}

}  // namespace idscope

#include "idscope/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "idscope/error.hpp"
#include "idscope/neighbors.hpp"
#include "idscope/rng.hpp"
#include "idscope/synth.hpp"

namespace idscope {

namespace {

std::size_t table_order(const std::vector<EstimatorConfig>& methods) {
  std::size_t order = 2;
  for (const auto& m : methods) {
    if (m.method == Method::PointwiseOracle) throw Error(ErrorCode::InvalidArgument, "sweeps run neighbor-based estimators only");
    order = std::max(order, m.required_order());
  }
  return order;
}

// estimates[task][method] for tasks = (setting, replicate); replicates run in
// parallel and are gathered in replicate order.
template <typename MakeCloud>
std::vector<std::vector<double>> run_tasks(std::size_t settings, std::size_t reps,
                                           const std::vector<EstimatorConfig>& methods, MakeCloud make_cloud) {
  const std::size_t order = table_order(methods);
  const std::size_t tasks = settings * reps;
  std::vector<std::vector<double>> out(tasks, std::vector<double>(methods.size()));
  std::vector<std::exception_ptr> failures(tasks);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < tasks; ++t) {
    try {
      const PointCloud cloud = make_cloud(t / reps, t % reps);
      const NeighborTable table = knn_distances(cloud, order, false);
      for (std::size_t m = 0; m < methods.size(); ++m) out[t][m] = run_estimator(methods[m], table).value;
    } catch (...) {
      failures[t] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

SweepRow summarize_row(std::size_t true_dim, std::size_t ambient, const std::string& method, std::vector<double> values) {
  SweepRow row{true_dim, ambient, method, 0.0, 0.0, 0.0, {}};
  const SummaryStats s = summarize(values);
  row.mean = s.mean;
  row.ci_low = s.mean - 1.96 * s.std_error;
  row.ci_high = s.mean + 1.96 * s.std_error;
  row.estimates = std::move(values);
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_bias(const BiasSweepConfig& cfg) {
  if (cfg.reps < 1 || cfg.dims.empty() || cfg.methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bias sweep needs dims, methods and reps >= 1");
  }
  const auto est = run_tasks(cfg.dims.size(), cfg.reps, cfg.methods, [&](std::size_t d, std::size_t r) {
    return sample_uniform_ball(cfg.dims[d], cfg.n, stream_seed(cfg.seed, r));
  });
  std::vector<SweepRow> rows;
  for (std::size_t d = 0; d < cfg.dims.size(); ++d) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      std::vector<double> values(cfg.reps);
      for (std::size_t r = 0; r < cfg.reps; ++r) values[r] = est[d * cfg.reps + r][m];
      rows.push_back(summarize_row(cfg.dims[d], cfg.dims[d], cfg.methods[m].label(), std::move(values)));
    }
  }
  return rows;
}

std::vector<SweepRow> sweep_ambient(const AmbientSweepConfig& cfg) {
  if (cfg.reps < 1 || cfg.ambient.empty() || cfg.methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "ambient sweep needs ambient sizes, methods and reps >= 1");
  }
  for (auto a : cfg.ambient) {
    if (a < cfg.true_dim) throw Error(ErrorCode::AmbientTooSmall, "ambient size below the true dimension");
  }
  const auto est = run_tasks(cfg.ambient.size(), cfg.reps, cfg.methods, [&](std::size_t a, std::size_t r) {
    // Fresh samples per ambient size: reusing one ball would make the comparison
    // a pure isometry check with identical estimates.
    const std::uint64_t s = stream_seed(stream_seed(cfg.seed, cfg.ambient[a]), r);
    return embed_ambient(sample_uniform_ball(cfg.true_dim, cfg.n, s), cfg.ambient[a], cfg.rotate,
                         stream_seed(s, 0x524f54));
  });
  std::vector<SweepRow> rows;
  for (std::size_t a = 0; a < cfg.ambient.size(); ++a) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      std::vector<double> values(cfg.reps);
      for (std::size_t r = 0; r < cfg.reps; ++r) values[r] = est[a * cfg.reps + r][m];
      rows.push_back(summarize_row(cfg.true_dim, cfg.ambient[a], cfg.methods[m].label(), std::move(values)));
    }
  }
  return rows;
}

double relative_spread(const std::vector<SweepRow>& rows, const std::string& method) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    lo = std::min(lo, r.mean);
    hi = std::max(hi, r.mean);
    sum += r.mean;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "no rows for method " + method);
  return (hi - lo) / (sum / static_cast<double>(count));
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "true_dim,ambient_dim,method,mean,ci_low,ci_high,reps\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.true_dim << ',' << r.ambient_dim << ',' << r.method << ',' << r.mean << ',' << r.ci_low << ','
        << r.ci_high << ',' << r.estimates.size() << '\n';
  }
  out.precision(old_precision);
}

}  // namespace idscope

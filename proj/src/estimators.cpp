#include "idscope/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "idscope/error.hpp"

namespace idscope {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mle: return "mle";
    case Method::TwoNnMle: return "twonn";
    case Method::TwoNnRegression: return "twonn-reg";
    case Method::Gride: return "gride";
    case Method::PointwiseOracle: return "oracle";
  }
  return "unknown";
}

std::string_view to_string(SupportVerdict v) {
  return v == SupportVerdict::Continuous ? "Continuous" : "FiniteSupportSuspected";
}

namespace {

/// Rows of the table with T_1 > 0, or throw under the Error policy.
std::vector<std::size_t> usable_rows(const NeighborTable& table, ZeroDistancePolicy policy, std::size_t& dropped) {
  std::vector<std::size_t> rows;
  rows.reserve(table.size());
  dropped = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.T(i, 1) > 0.0) {
      rows.push_back(i);
    } else if (policy == ZeroDistancePolicy::Error) {
      throw Error(ErrorCode::ZeroDistance, "point " + std::to_string(i) + " has a neighbor at distance zero");
    } else {
      ++dropped;
    }
  }
  if (rows.empty()) throw Error(ErrorCode::ZeroDistance, "every point has a duplicate; no usable distances");
  return rows;
}

std::size_t discard_count(double fraction, std::size_t n) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "discard fraction must lie in [0, 1)");
  }
  // The small offset keeps e.g. 0.1 * 5000 from rounding up to 501.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

std::vector<double> log_ratios(std::span<const double> ratios) {
  std::vector<double> logs(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] >= 1.0) || !std::isfinite(ratios[i])) {
      throw Error(ErrorCode::InvalidArgument, "distance ratios must be finite and >= 1");
    }
    logs[i] = std::log(ratios[i]);
  }
  return logs;
}

double resolve_d_max(double d_max, const NeighborTable& table) {
  if (d_max > 0.0) return d_max;
  return table.ambient_dim > 0 ? 10.0 * static_cast<double>(table.ambient_dim) : 1000.0;
}

}  // namespace

IdEstimate estimate_mle(const NeighborTable& table, std::size_t k, const MleOptions& opts) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "MLE needs k >= 2");
  if (k > table.max_order()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds table order " + std::to_string(table.max_order()));
  }
  IdEstimate est;
  est.method = Method::Mle;
  const auto rows = usable_rows(table, opts.zero_policy, est.dropped_duplicates);

  // inverse[i] = mean log(T_k / T_j) over j < k, the reciprocal of the local estimate
  std::vector<double> inverse(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const double tk = table.T(i, k);
    double s = 0.0;
    for (std::size_t j = 1; j < k; ++j) s += std::log(tk / table.T(i, j));
    inverse[r] = s / static_cast<double>(k - 1);
  }

  est.per_point.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) est.per_point[r] = 1.0 / inverse[r];

  const SummaryStats inv = summarize(inverse);
  if (opts.aggregation == MleAggregation::InverseMeanInverse) {
    if (!(inv.mean > 0.0)) throw Error(ErrorCode::ZeroDistance, "all neighbor distances tie; log-ratios vanish");
    est.value = 1.0 / inv.mean;
    // delta method on the mean of the inverses
    est.std_error = inv.std_error / (inv.mean * inv.mean);
  } else {
    const SummaryStats local = summarize(est.per_point);
    if (!std::isfinite(local.mean)) throw Error(ErrorCode::ZeroDistance, "a local estimate is infinite");
    est.value = local.mean;
    est.std_error = local.std_error;
  }
  est.used_points = rows.size();
  est.params = {{"k", static_cast<double>(k)},
                {"aggregation", opts.aggregation == MleAggregation::InverseMeanInverse ? 0.0 : 1.0}};
  return est;
}

IdEstimate twonn_mle_from_ratios(std::span<const double> ratios, double discard_fraction) {
  std::vector<double> logs = log_ratios(ratios);
  const std::size_t n = logs.size();
  const std::size_t discarded = discard_count(discard_fraction, n);
  if (discarded >= n) throw Error(ErrorCode::AllDiscarded, "discard fraction removes every ratio");
  const std::size_t kept = n - discarded;

  double sum = 0.0;
  double cut = 0.0;
  if (discarded == 0) {
    sum = std::accumulate(logs.begin(), logs.end(), 0.0);
  } else {
    std::sort(logs.begin(), logs.end());
    sum = std::accumulate(logs.begin(), logs.begin() + static_cast<std::ptrdiff_t>(kept), 0.0);
    cut = logs[kept - 1];
    sum += static_cast<double>(discarded) * cut;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "all retained ratios equal one");

  IdEstimate est;
  est.method = Method::TwoNnMle;
  est.value = discarded == 0 ? 1.0 / (sum / static_cast<double>(n)) : static_cast<double>(kept) / sum;
  est.std_error = est.value / std::sqrt(static_cast<double>(kept));
  est.used_points = kept;
  est.params = {{"discard_fraction", discard_fraction}};
  return est;
}

IdEstimate estimate_twonn_mle(const NeighborTable& table, double discard_fraction, ZeroDistancePolicy policy) {
  if (table.max_order() < 2) throw Error(ErrorCode::KTooLarge, "TwoNN needs two neighbors per point");
  std::size_t dropped = 0;
  const auto rows = usable_rows(table, policy, dropped);
  std::vector<double> ratios(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) ratios[r] = table.T(rows[r], 2) / table.T(rows[r], 1);
  IdEstimate est = twonn_mle_from_ratios(ratios, discard_fraction);
  est.dropped_duplicates = dropped;
  return est;
}

IdEstimate twonn_regression_from_ratios(std::span<const double> ratios, double discard_fraction) {
  std::vector<double> logs = log_ratios(ratios);
  const std::size_t n = logs.size();
  const std::size_t discarded = discard_count(discard_fraction, n);
  if (discarded >= n) throw Error(ErrorCode::AllDiscarded, "discard fraction removes every ratio");
  std::sort(logs.begin(), logs.end());

  // The n-th point has F_emp = 1 and is always excluded.
  const std::size_t fit = std::min(n - discarded, n - 1);
  if (fit < 2) throw Error(ErrorCode::TooFewForRegression, "need at least two regression points");

  double sxx = 0.0, sxy = 0.0;
  std::vector<double> ys(fit);
  for (std::size_t j = 0; j < fit; ++j) {
    const double cdf = static_cast<double>(j + 1) / static_cast<double>(n);
    ys[j] = -std::log1p(-cdf);
    sxx += logs[j] * logs[j];
    sxy += logs[j] * ys[j];
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "all retained ratios equal one");

  IdEstimate est;
  est.method = Method::TwoNnRegression;
  est.value = sxy / sxx;
  double rss = 0.0;
  for (std::size_t j = 0; j < fit; ++j) {
    const double res = ys[j] - est.value * logs[j];
    rss += res * res;
  }
  est.std_error = std::sqrt(rss / static_cast<double>(fit - 1) / sxx);
  est.used_points = fit;
  est.params = {{"discard_fraction", discard_fraction}};
  return est;
}

IdEstimate estimate_twonn_regression(const NeighborTable& table, double discard_fraction, ZeroDistancePolicy policy) {
  if (table.max_order() < 2) throw Error(ErrorCode::KTooLarge, "TwoNN needs two neighbors per point");
  std::size_t dropped = 0;
  const auto rows = usable_rows(table, policy, dropped);
  std::vector<double> ratios(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) ratios[r] = table.T(rows[r], 2) / table.T(rows[r], 1);
  IdEstimate est = twonn_regression_from_ratios(ratios, discard_fraction);
  est.dropped_duplicates = dropped;
  return est;
}

// Under the local Poisson model omega_d T_j^d are arrival times of a unit-rate
// process, so u = mu^-d = (T_k / T_2k)^d ~ Beta(k, k). Changing variables:
//   log f(mu | d) = log d + (k-1) log(mu^d - 1) - (d(2k-1) + 1) log mu - log B(k, k).
double gride_log_density(double mu, double d, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double lm = std::log(mu);
  const double log_beta = 2.0 * std::lgamma(kk) - std::lgamma(2.0 * kk);
  double tail = 0.0;
  if (k > 1) tail = (kk - 1.0) * std::log(std::expm1(d * lm));
  return std::log(d) + tail - (d * (2.0 * kk - 1.0) + 1.0) * lm - log_beta;
}

namespace {

struct GrideScore {
  std::span<const double> logs;
  double k;

  // d/dd of the pooled log-likelihood; strictly decreasing in d.
  double operator()(double d) const {
    double s = static_cast<double>(logs.size()) / d;
    double lin = 0.0;
    double curv = 0.0;
    for (double l : logs) {
      lin += l;
      curv += l > 0.0 ? l / -std::expm1(-d * l) : 1.0 / d;
    }
    return s + (k - 1.0) * curv - (2.0 * k - 1.0) * lin;
  }

  double curvature(double d) const {
    double c = -static_cast<double>(logs.size()) / (d * d);
    for (double l : logs) {
      if (l > 0.0) {
        const double e = std::exp(-d * l);
        const double den = -std::expm1(-d * l);
        c -= (k - 1.0) * l * l * e / (den * den);
      } else {
        c -= (k - 1.0) / (d * d);
      }
    }
    return c;
  }
};

}  // namespace

IdEstimate gride_from_ratios(std::span<const double> ratios, std::size_t k, double d_max) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "Gride scale must be >= 1");
  if (!(d_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "d_max must be positive");
  if (ratios.empty()) throw Error(ErrorCode::TooFewPoints, "no ratios");
  const std::vector<double> logs = log_ratios(ratios);
  const GrideScore score{logs, static_cast<double>(k)};

  IdEstimate est;
  est.method = Method::Gride;
  est.used_points = logs.size();
  est.params = {{"k", static_cast<double>(k)}, {"d_max", d_max}};

  const double hi_score = score(d_max);
  if (hi_score >= 0.0) {
    est.value = d_max;
    est.boundary_hit = true;
  } else {
    double lo = std::min(1e-6, 0.5 * d_max);
    while (score(lo) <= 0.0) lo *= 1e-3;
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(score, lo, d_max, score(lo), hi_score,
                                                          boost::math::tools::eps_tolerance<double>(52), iters);
    est.value = 0.5 * (a + b);
  }
  const double info = -score.curvature(est.value);
  est.std_error = info > 0.0 ? 1.0 / std::sqrt(info) : std::numeric_limits<double>::infinity();
  return est;
}

IdEstimate estimate_gride(const NeighborTable& table, std::size_t k, double d_max, ZeroDistancePolicy policy) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "Gride scale must be >= 1");
  if (2 * k > table.max_order()) {
    throw Error(ErrorCode::KTooLarge, "Gride scale " + std::to_string(k) + " needs " + std::to_string(2 * k) +
                                          " neighbors, table has " + std::to_string(table.max_order()));
  }
  std::size_t dropped = 0;
  const auto rows = usable_rows(table, policy, dropped);
  std::vector<double> ratios(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) ratios[r] = table.T(rows[r], 2 * k) / table.T(rows[r], k);
  IdEstimate est = gride_from_ratios(ratios, k, resolve_d_max(d_max, table));
  est.dropped_duplicates = dropped;
  return est;
}

MultiscaleEstimate gride_multiscale(const NeighborTable& table, std::span<const std::size_t> scales, double d_max) {
  if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "no Gride scales given");
  MultiscaleEstimate out;
  double sum = 0.0;
  for (std::size_t k : scales) {
    out.per_scale.push_back(estimate_gride(table, k, d_max));
    sum += out.per_scale.back().value;
  }
  out.average = sum / static_cast<double>(scales.size());
  return out;
}

SupportDiagnosis diagnose_support(const NeighborTable& table, double threshold) {
  SupportDiagnosis diag;
  if (table.size() == 0 || table.max_order() == 0) return diag;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < table.size(); ++i) zeros += table.T(i, 1) == 0.0;
  diag.duplicate_fraction = static_cast<double>(zeros) / static_cast<double>(table.size());
  diag.verdict = diag.duplicate_fraction > threshold ? SupportVerdict::FiniteSupportSuspected : SupportVerdict::Continuous;
  return diag;
}

std::size_t EstimatorConfig::required_order() const {
  switch (method) {
    case Method::Mle: return k;
    case Method::TwoNnMle:
    case Method::TwoNnRegression: return 2;
    case Method::Gride: return 2 * k;
    case Method::PointwiseOracle: return 1;
  }
  return 2;
}

std::string EstimatorConfig::label() const {
  switch (method) {
    case Method::Mle: return "mle:k=" + std::to_string(k);
    case Method::Gride: return "gride:k=" + std::to_string(k);
    case Method::TwoNnMle:
    case Method::TwoNnRegression: {
      std::string out(to_string(method));
      if (discard_fraction != kDefaultDiscardFraction) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ":f=%g", discard_fraction);
        out += buf;
      }
      return out;
    }
    default: return std::string(to_string(method));
  }
}

IdEstimate run_estimator(const EstimatorConfig& cfg, const NeighborTable& table) {
  switch (cfg.method) {
    case Method::Mle: return estimate_mle(table, cfg.k, {cfg.aggregation, ZeroDistancePolicy::Drop});
    case Method::TwoNnMle: return estimate_twonn_mle(table, cfg.discard_fraction);
    case Method::TwoNnRegression: return estimate_twonn_regression(table, cfg.discard_fraction);
    case Method::Gride: return estimate_gride(table, cfg.k, cfg.d_max);
    case Method::PointwiseOracle:
      throw Error(ErrorCode::InvalidArgument, "the pointwise oracle runs on point clouds, not neighbor tables");
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

EstimatorConfig parse_estimator(std::string_view text) {
  EstimatorConfig cfg;
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  if (name == "mle") {
    cfg.method = Method::Mle;
  } else if (name == "twonn") {
    cfg.method = Method::TwoNnMle;
  } else if (name == "twonn-reg") {
    cfg.method = Method::TwoNnRegression;
  } else if (name == "gride") {
    cfg.method = Method::Gride;
    cfg.k = 1;
  } else if (name == "oracle") {
    cfg.method = Method::PointwiseOracle;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
  }

  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value in '" + std::string(item) + "'");
    const std::string_view key = item.substr(0, eq);
    const std::string value(item.substr(eq + 1));
    try {
      if (key == "k") {
        cfg.k = std::stoul(value);
      } else if (key == "f") {
        cfg.discard_fraction = std::stod(value);
      } else if (key == "dmax") {
        cfg.d_max = std::stod(value);
      } else if (key == "agg") {
        if (value == "inverse") cfg.aggregation = MleAggregation::InverseMeanInverse;
        else if (value == "mean") cfg.aggregation = MleAggregation::ArithmeticMean;
        else throw Error(ErrorCode::InvalidArgument, "agg must be inverse or mean");
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown estimator option '" + std::string(key) + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidArgument, "bad value '" + value + "' for " + std::string(key));
    }
  }
  return cfg;
}

}  // namespace idscope

#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "idscope/error.hpp"
#include "idscope/estimators.hpp"
#include "idscope/synth.hpp"

using namespace idscope;

namespace {

ErrorCode code_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an idscope::Error");
  return ErrorCode::InvalidArgument;
}

// Inverse-CDF draws from Pareto(d) on [1, inf) with std:: machinery.
std::vector<double> pareto_sample(double d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = std::pow(1.0 - u(g), -1.0 / d);
  return out;
}

// Maximizes f on [lo, hi] by golden-section search.
template <typename F>
double golden_max(F f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

NeighborTable table_of(const PointCloud& c, std::size_t k) { return knn_distances(c, k, false); }

}  // namespace

TEST_CASE("MLE equals the direct formula over brute-force distances") {
  const PointCloud c = sample_uniform_ball(10, 5000, 11);
  const std::size_t k = 20;
  const auto ref = testing::brute_force_knn(c.data(), k);
  double inv_sum = 0.0;
  for (const auto& t : ref) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) s += std::log(t[k - 1] / t[j]);
    inv_sum += s / static_cast<double>(k - 1);
  }
  const double direct = static_cast<double>(ref.size()) / inv_sum;

  const IdEstimate est = estimate_mle(table_of(c, k), k);
  CHECK(testing::rel_diff(est.value, direct) <= 1e-9);
  CHECK(est.value < 10.0);
  CHECK(est.value > 8.5);
  CHECK(est.used_points == 5000);
  CHECK(est.per_point.size() == 5000);
  CHECK(est.std_error > 0.0);
}

TEST_CASE("MLE aggregation: arithmetic mean of local estimates dominates the pooled value") {
  const NeighborTable t = table_of(sample_uniform_ball(3, 2000, 12), 10);
  const IdEstimate pooled = estimate_mle(t, 10);
  const IdEstimate mean = estimate_mle(t, 10, {MleAggregation::ArithmeticMean, ZeroDistancePolicy::Drop});
  const double direct = std::accumulate(pooled.per_point.begin(), pooled.per_point.end(), 0.0) /
                        static_cast<double>(pooled.per_point.size());
  CHECK(mean.value == doctest::Approx(direct).epsilon(1e-12));
  CHECK(mean.value >= pooled.value);
}

TEST_CASE("MLE argument errors") {
  const NeighborTable t = table_of(testing::gaussian_cloud(50, 3, 1), 5);
  CHECK(code_of([&] { estimate_mle(t, 6); }) == ErrorCode::KTooLarge);
  CHECK(code_of([&] { estimate_mle(t, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("TwoNN MLE on exact Pareto ratios") {
  const auto rho = pareto_sample(4.0, 100000, 3);
  double s = 0.0;
  for (double r : rho) s += std::log(r);

  const IdEstimate plain = twonn_mle_from_ratios(rho, 0.0);
  CHECK(plain.value == doctest::Approx(rho.size() / s).epsilon(1e-13));
  CHECK(std::abs(plain.value - 4.0) < 4 * plain.std_error);

  // Trimming the largest ratios must not bias the fit.
  const IdEstimate trimmed = twonn_mle_from_ratios(rho, 0.1);
  CHECK(trimmed.used_points == 90000);
  CHECK(std::abs(trimmed.value - 4.0) < 4 * trimmed.std_error);
}

TEST_CASE("TwoNN MLE maximizes the censored Pareto likelihood") {
  auto rho = pareto_sample(2.5, 3000, 4);
  const double f = 0.2;
  const IdEstimate est = twonn_mle_from_ratios(rho, f);

  std::sort(rho.begin(), rho.end());
  const std::size_t m = 600, kept = rho.size() - m;
  const double cut = std::log(rho[kept - 1]);
  // Density d rho^-(d+1) for the kept ratios, survival rho_cut^-d for the rest.
  const auto loglik = [&](double d) {
    double l = 0.0;
    for (std::size_t i = 0; i < kept; ++i) l += std::log(d) - (d + 1.0) * std::log(rho[i]);
    return l - static_cast<double>(m) * d * cut;
  };
  CHECK(est.value == doctest::Approx(golden_max(loglik, 0.01, 50.0)).epsilon(1e-7));
}

TEST_CASE("TwoNN regression on Pareto quantiles") {
  const std::size_t n = 2000;
  std::vector<double> rho(n);
  for (std::size_t j = 0; j < n; ++j) rho[j] = std::pow(1.0 - (j + 1.0) / (n + 1.0), -1.0 / 2.0);
  const IdEstimate est = twonn_regression_from_ratios(rho, 0.1);
  CHECK(std::abs(est.value - 2.0) <= 0.05);
  CHECK(est.used_points == n - 200);

  // The last point (F = 1) is excluded even without trimming.
  CHECK(twonn_regression_from_ratios(rho, 0.0).used_points == n - 1);

  const std::vector<double> two{1.5, 2.0};
  CHECK(code_of([&] { twonn_regression_from_ratios(two, 0.0); }) == ErrorCode::TooFewForRegression);
  CHECK(code_of([&] { twonn_regression_from_ratios(two, 0.99); }) == ErrorCode::AllDiscarded);
}

TEST_CASE("TwoNN estimators on uniform balls") {
  for (std::size_t d : {1, 2, 3}) {
    const NeighborTable t = table_of(sample_uniform_ball(d, 5000, 20 + d), 2);
    CHECK(std::abs(estimate_twonn_mle(t).value - static_cast<double>(d)) < 0.15);
    CHECK(std::abs(estimate_twonn_regression(t).value - static_cast<double>(d)) < 0.2);
  }
}

TEST_CASE("Gride density integrates to one") {
  // Pre-build check of the assumed model: integrate f(mu) over [1, inf) using
  // mu = 1 + t / (1 - t) and the trapezoid rule.
  for (std::size_t k : {1, 2, 4}) {
    for (double d : {0.7, 3.0, 12.0}) {
      const int steps = 200000;
      double sum = 0.0;
      for (int i = 1; i < steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const double mu = 1.0 + t / (1.0 - t);
        sum += std::exp(gride_log_density(mu, d, k)) / ((1.0 - t) * (1.0 - t));
      }
      CHECK(sum / steps == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("Gride k = 1 reduces to TwoNN without trimming") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const NeighborTable t = table_of(sample_uniform_ball(2 + s, 1500, 30 + s), 2);
    CHECK(testing::rel_diff(estimate_gride(t, 1).value, estimate_twonn_mle(t, 0.0).value) <= 1e-9);
    CHECK(testing::rel_diff(estimate_mle(t, 2).value, estimate_twonn_mle(t, 0.0).value) <= 1e-9);
  }
}

TEST_CASE("Gride maximizes the summed log-density") {
  const NeighborTable t = table_of(sample_uniform_ball(6, 3000, 5), 8);
  for (std::size_t k : {2, 4}) {
    std::vector<double> mu;
    for (std::size_t i = 0; i < t.size(); ++i) mu.push_back(t.T(i, 2 * k) / t.T(i, k));
    const auto loglik = [&](double d) {
      double l = 0.0;
      for (double m : mu) l += gride_log_density(m, d, k);
      return l;
    };
    const IdEstimate est = estimate_gride(t, k);
    CHECK(est.value == doctest::Approx(golden_max(loglik, 0.1, 60.0)).epsilon(1e-6));
    CHECK_FALSE(est.boundary_hit);
    CHECK(est.std_error > 0.0);
  }
}

TEST_CASE("Gride recovers d from inverse-CDF samples of its own model") {
  // u = mu^-d ~ Beta(2, 2): CDF 3u^2 - 2u^3, inverted by bisection.
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> mu(100000);
  for (auto& m : mu) {
    const double p = unif(g);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (3 * mid * mid - 2 * mid * mid * mid < p ? lo : hi) = mid;
    }
    m = std::pow(0.5 * (lo + hi), -1.0 / 3.0);
  }
  const IdEstimate est = gride_from_ratios(mu, 2, 100.0);
  CHECK(std::abs(est.value - 3.0) <= 0.1);
}

TEST_CASE("Gride reports a boundary maximum") {
  const auto rho = pareto_sample(40.0, 2000, 6);
  const IdEstimate est = gride_from_ratios(rho, 1, 5.0);
  CHECK(est.boundary_hit);
  CHECK(est.value == 5.0);

  const NeighborTable t = table_of(testing::gaussian_cloud(200, 3, 1), 4);
  CHECK(code_of([&] { estimate_gride(t, 3); }) == ErrorCode::KTooLarge);
}

TEST_CASE("Gride scales agree on a uniform 5-ball") {
  const NeighborTable t = table_of(sample_uniform_ball(5, 5000, 7), 64);
  const std::vector<std::size_t> few{1, 2, 4};
  const MultiscaleEstimate m = gride_multiscale(t, few);
  double lo = 1e9, hi = 0;
  for (const auto& e : m.per_scale) {
    lo = std::min(lo, e.value);
    hi = std::max(hi, e.value);
  }
  CHECK(hi / lo <= 1.15);

  const MultiscaleEstimate six = gride_multiscale(t);
  REQUIRE(six.per_scale.size() == 6);
  lo = 1e9;
  hi = 0;
  for (const auto& e : six.per_scale) {
    lo = std::min(lo, e.value);
    hi = std::max(hi, e.value);
  }
  CHECK(six.average >= lo);
  CHECK(six.average <= hi);

  const std::vector<std::size_t> one{2};
  CHECK(gride_multiscale(t, one).average == estimate_gride(t, 2).value);
}

TEST_CASE("zero-distance policy") {
  Matrix m = testing::gaussian_matrix(300, 3, 8);
  for (Eigen::Index i = 0; i < 10; ++i) m.row(100 + i) = m.row(i);
  const NeighborTable t = table_of(PointCloud(m), 4);

  const IdEstimate est = estimate_twonn_mle(t, 0.1);
  CHECK(est.dropped_duplicates == 20);
  CHECK(estimate_mle(t, 4).dropped_duplicates == 20);
  CHECK(estimate_gride(t, 2).dropped_duplicates == 20);

  CHECK(code_of([&] { estimate_twonn_mle(t, 0.1, ZeroDistancePolicy::Error); }) == ErrorCode::ZeroDistance);
  CHECK(code_of([&] { estimate_mle(t, 4, {MleAggregation::InverseMeanInverse, ZeroDistancePolicy::Error}); }) ==
        ErrorCode::ZeroDistance);
}

TEST_CASE("estimators only see distance ratios") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PointCloud c = sample_uniform_ball(3 + s, 1000, 40 + s);
    const PointCloud scaled(Matrix(c.data() * 0.037));
    const NeighborTable a = table_of(c, 8), b = table_of(scaled, 8);
    CHECK(testing::rel_diff(estimate_mle(b, 8).value, estimate_mle(a, 8).value) <= 1e-9);
    CHECK(testing::rel_diff(estimate_twonn_mle(b).value, estimate_twonn_mle(a).value) <= 1e-9);
    CHECK(testing::rel_diff(estimate_twonn_regression(b).value, estimate_twonn_regression(a).value) <= 1e-9);
    CHECK(testing::rel_diff(estimate_gride(b, 4).value, estimate_gride(a, 4).value) <= 1e-9);
  }
}

TEST_CASE("pointwise dimension") {
  SUBCASE("interval, explicit radii") {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(10000, 1);
    m(0, 0) = 0.5;
    for (Eigen::Index i = 1; i < m.rows(); ++i) m(i, 0) = u(g);
    PointwiseOptions o;
    for (int i = 0; i < 8; ++i) o.radii.push_back(0.01 * std::pow(10.0, i / 7.0));
    CHECK(std::abs(estimate_pointwise_dimension(PointCloud(m), 0, o).value - 1.0) <= 0.1);
  }
  SUBCASE("disk, interior points") {
    const PointCloud c = sample_uniform_ball(2, 10000, 2);
    const auto q = interior_points(c, 20, 3);
    for (auto i : q) CHECK(std::abs(estimate_pointwise_dimension(c, i).value - 2.0) <= 0.15);
    CHECK(std::abs(pointwise_dimension_mean(c, q).value - 2.0) <= 0.15);
  }
  SUBCASE("atoms have dimension exactly zero") {
    const PointCloud same(Matrix::Ones(50, 3));
    CHECK(estimate_pointwise_dimension(same, 7).value == 0.0);
    const PointCloud vocab = sample_finite_vocabulary(10, 4, 500, 3);
    for (std::size_t i = 0; i < 20; ++i) CHECK(estimate_pointwise_dimension(vocab, i).value == 0.0);
  }
  SUBCASE("radii that hold fewer than two points are dropped") {
    Matrix m(5, 1);
    m << 0, 1, 2, 3, 4;
    PointwiseOptions o;
    o.radii = {0.5, 1.5, 2.5, 3.5, 4.5};
    const IdEstimate est = estimate_pointwise_dimension(PointCloud(m), 0, o);
    CHECK(est.params.at("radii") == 3.0);
    o.radii = {0.5, 1.5};
    CHECK(code_of([&] { estimate_pointwise_dimension(PointCloud(m), 0, o); }) == ErrorCode::EmptyBall);
  }
}

TEST_CASE("interior points") {
  const PointCloud c = sample_uniform_ball(2, 4000, 4);
  const auto q = interior_points(c, 50, 1);
  REQUIRE(q.size() == 50);
  CHECK(std::is_sorted(q.begin(), q.end()));
  CHECK(std::adjacent_find(q.begin(), q.end()) == q.end());
  for (auto i : q) CHECK(c.row(i).norm() < 0.6);  // quarter of the mass lies within radius 0.5
  CHECK(interior_points(c, 50, 1) == q);
  CHECK(interior_points(c, 50, 2) != q);
  CHECK(interior_points(c, 10000, 1).size() == 4000);
}

TEST_CASE("support diagnosis") {
  const PointCloud vocab = sample_finite_vocabulary(100, 16, 5000, 5);
  const SupportDiagnosis d = diagnose_support(table_of(vocab, 2));
  CHECK(d.duplicate_fraction > 0.99);
  CHECK(d.verdict == SupportVerdict::FiniteSupportSuspected);

  const SupportDiagnosis c = diagnose_support(table_of(sample_uniform_ball(3, 2000, 6), 2));
  CHECK(c.duplicate_fraction == 0.0);
  CHECK(c.verdict == SupportVerdict::Continuous);

  Matrix m = testing::gaussian_matrix(100, 2, 3);
  m.row(1) = m.row(0);  // 2% of rows sit on a duplicate
  const NeighborTable t = table_of(PointCloud(m), 2);
  CHECK(diagnose_support(t).verdict == SupportVerdict::FiniteSupportSuspected);
  CHECK(diagnose_support(t, 0.05).verdict == SupportVerdict::Continuous);
}

TEST_CASE("estimator configs") {
  CHECK(parse_estimator("twonn").method == Method::TwoNnMle);
  CHECK(parse_estimator("twonn").discard_fraction == kDefaultDiscardFraction);
  CHECK(parse_estimator("twonn:f=0").discard_fraction == 0.0);
  CHECK(parse_estimator("twonn:f=0").label() == "twonn:f=0");
  CHECK(parse_estimator("twonn-reg").method == Method::TwoNnRegression);
  CHECK(parse_estimator("mle:k=7").k == 7);
  CHECK(parse_estimator("mle:k=7").required_order() == 7);
  CHECK(parse_estimator("mle:k=5,agg=mean").aggregation == MleAggregation::ArithmeticMean);
  CHECK(parse_estimator("gride").k == 1);
  CHECK(parse_estimator("gride:k=4,dmax=30").required_order() == 8);
  CHECK(parse_estimator("gride:k=4,dmax=30").d_max == 30.0);
  CHECK(parse_estimator("oracle").method == Method::PointwiseOracle);
  CHECK(parse_estimator("mle:k=20").label() == "mle:k=20");

  CHECK_THROWS_AS(parse_estimator("pca"), Error);
  CHECK_THROWS_AS(parse_estimator("mle:k"), Error);
  CHECK_THROWS_AS(parse_estimator("mle:k=x"), Error);
  CHECK_THROWS_AS(parse_estimator("mle:q=1"), Error);

  const NeighborTable t = table_of(sample_uniform_ball(3, 500, 9), 4);
  CHECK(run_estimator(parse_estimator("gride:k=1"), t).value ==
        doctest::Approx(run_estimator(parse_estimator("twonn:f=0"), t).value).epsilon(1e-9));
  CHECK(code_of([&] { run_estimator(parse_estimator("oracle"), t); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("small samples keep a usable default grid: the outer ball holds min_outer_count neighbors") {
  const PointCloud cloud = sample_uniform_ball(2, 120, 4);
  const auto all = testing::brute_force_row(cloud.data(), 7);
  const IdEstimate e = estimate_pointwise_dimension(cloud, 7, fine_scale_oracle());
  CHECK(e.params.at("r_max") == doctest::Approx(std::sqrt(all[9].first)).epsilon(1e-12));
  PointwiseOptions loose = fine_scale_oracle();
  loose.min_outer_count = 0;
  CHECK(estimate_pointwise_dimension(cloud, 7, loose).params.at("r_max") <= std::sqrt(all[2].first) * (1 + 1e-12));
}

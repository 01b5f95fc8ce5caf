#include <doctest.h>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "idscope/error.hpp"
#include "idscope/lipschitz.hpp"
#include "idscope/synth.hpp"

using namespace idscope;

namespace {

double exact_spectral_norm(const Eigen::MatrixXd& w) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
}

LayerSpec linear(std::size_t out, double scale = 1.0, LinearInit init = LinearInit::Gaussian) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.out = out;
  s.scale = scale;
  s.init = init;
  s.bias_std = 0.3;
  return s;
}

LayerSpec simple(LayerKind k) {
  LayerSpec s;
  s.kind = k;
  return s;
}

}  // namespace

TEST_CASE("certified spectral norm bounds the exact one from above, tightly") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Eigen::MatrixXd w = testing::gaussian_matrix(20 + 5 * s, 30, s);
    const double exact = exact_spectral_norm(w);
    const double cert = certified_spectral_norm(w);
    CHECK(cert >= exact);
    CHECK(cert <= exact * (1.0 + 2e-3));
  }
  CHECK(certified_spectral_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d.diagonal() << 1, 5, 2;
  CHECK(certified_spectral_norm(d) == doctest::Approx(5.0 * (1.0 + 1e-4)).epsilon(1e-6));
}

TEST_CASE("layer bounds") {
  CHECK(LipschitzLayer(ReluMap{}).lipschitz_bound() == 1.0);
  CHECK(LipschitzLayer(TanhMap{}).lipschitz_bound() == 1.0);
  const LipschitzLayer rms(RmsNormMap{Eigen::Vector3d(0.5, -2.0, 1.0), 4.0});
  CHECK(rms.lipschitz_bound() == doctest::Approx(1.0));

  LinearMap lin{Eigen::MatrixXd::Identity(3, 3) * 0.5, Eigen::VectorXd::Zero(3)};
  std::vector<LipschitzLayer> inner{LipschitzLayer(lin), LipschitzLayer(TanhMap{})};
  const LipschitzLayer res(ResidualMap{inner});
  CHECK(res.lipschitz_bound() == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(res.name() == "residual");

  CHECK_THROWS_AS(LipschitzLayer(LinearMap{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(3)}), Error);
  CHECK_THROWS_AS(LipschitzLayer(RmsNormMap{Eigen::Vector3d::Ones(), 0.0}), Error);
}

TEST_CASE("RMS norm: bound holds for nearby points and far apart ones") {
  const LipschitzLayer rms(RmsNormMap{Eigen::VectorXd::LinSpaced(6, -1.5, 2.0), 0.25});
  const double bound = rms.lipschitz_bound();
  const Matrix x = testing::gaussian_matrix(400, 6, 3) * 0.3;
  const Matrix y = rms.apply(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.rows(); ++i) {
    worst = std::max(worst, (y.row(i) - y.row(i + 1)).norm() / (x.row(i) - x.row(i + 1)).norm());
    // central difference along a random direction
    const Eigen::RowVectorXd dir = x.row(i + 1).normalized() * 1e-6;
    Matrix pair(2, 6);
    pair.row(0) = x.row(i) + dir;
    pair.row(1) = x.row(i) - dir;
    const Matrix out = rms.apply(pair);
    worst = std::max(worst, (out.row(0) - out.row(1)).norm() / (2 * dir.norm()));
  }
  CHECK(worst <= bound);
  CHECK(worst > 0.5 * bound);  // the bound is not vacuous
}

TEST_CASE("random networks respect their certified bound") {
  const std::vector<LayerSpec> specs{linear(24),
                                     simple(LayerKind::Relu),
                                     linear(24, 1.5),
                                     simple(LayerKind::Tanh),
                                     simple(LayerKind::RmsNorm),
                                     [] {
                                       LayerSpec r = simple(LayerKind::Residual);
                                       r.inner = {linear(0, 0.5), simple(LayerKind::Tanh)};
                                       return r;
                                     }(),
                                     linear(5)};
  const LipschitzNetwork net = build_random_net(3, specs, 17);
  CHECK(net.output_dim() == 5);
  const PointCloud ball = sample_uniform_ball(3, 3000, 4);
  const LayerStack stack = pushforward(net, ball, "toy");
  REQUIRE(stack.num_layers() == specs.size() + 1);
  CHECK(stack.info(0).name == "input");
  CHECK(stack.info(2).name == "relu_2");
  CHECK(stack.info(stack.num_layers() - 1).relative_depth == 1.0);

  double prefix = 1.0;
  for (std::size_t l = 1; l < stack.num_layers(); ++l) {
    prefix *= net.layers[l - 1].lipschitz_bound();
    CHECK(max_pairwise_ratio(ball, stack.layer(l), 10000, l) <= prefix * (1.0 + 1e-6));
    CHECK(max_pairwise_ratio(stack.layer(l - 1), stack.layer(l), 10000, l) <=
          net.layers[l - 1].lipschitz_bound() * (1.0 + 1e-6));
  }
  CHECK(prefix == doctest::Approx(net.bound()));

  // Same seed, same network.
  const LipschitzNetwork again = build_random_net(3, specs, 17);
  CHECK(pushforward(again, ball).layer(7).data() == stack.layer(7).data());
}

TEST_CASE("orthogonal layers are isometries when widening or square") {
  const std::vector<LayerSpec> specs{linear(10, 1.0, LinearInit::Orthogonal), linear(0, 1.0, LinearInit::Orthogonal)};
  const LipschitzNetwork net = build_random_net(4, specs, 3);
  const PointCloud ball = sample_uniform_ball(4, 200, 5);
  const LayerStack stack = pushforward(net, ball);
  for (std::size_t l = 1; l < 3; ++l) {
    const Matrix& a = ball.data();
    const Matrix& b = stack.layer(l).data();
    for (Eigen::Index i = 0; i + 1 < a.rows(); ++i)
      CHECK(testing::rel_diff((b.row(i) - b.row(i + 1)).norm(), (a.row(i) - a.row(i + 1)).norm()) <= 1e-12);
  }
  CHECK(net.bound() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(build_random_net(4, {linear(6, 1.0, LinearInit::Identity)}, 1), Error);
}

TEST_CASE("shape errors") {
  const LipschitzNetwork net = build_random_net(3, {linear(4)}, 1);
  CHECK_THROWS_AS(pushforward(net, sample_uniform_ball(2, 10, 1)), Error);
  LayerSpec bad = simple(LayerKind::Residual);
  bad.inner = {linear(7)};
  CHECK_THROWS_AS(build_random_net(3, {bad}, 1), Error);
}

TEST_CASE("violations") {
  const std::vector<double> up{2.0, 3.0};
  const auto v = find_violations(up, 0.5);
  REQUIRE(v.size() == 1);
  CHECK(v[0].layer == 1);
  CHECK(v[0].increase == 1.0);
  CHECK(find_violations(up, 1.0).empty());
  const std::vector<double> down{3.0, 2.9, 2.0, 2.05};
  CHECK(find_violations(down, 0.1).empty());
  CHECK(find_violations(down, 0.01).size() == 1);
}

TEST_CASE("audit of identical layers is clean") {
  const PointCloud ball = sample_uniform_ball(2, 2000, 6);
  const LayerStack stack = LayerStack::with_uniform_depths("same", {ball, ball, ball});
  AuditConfig cfg;
  cfg.tolerance = 1e-12;
  const AuditReport r = audit_monotonicity(stack, cfg);
  CHECK(r.violations.empty());
  CHECK_FALSE(r.oracle_violation);
  REQUIRE(r.per_layer.size() == 3);
  CHECK(r.per_layer[0].oracle.has_value());
  CHECK(r.per_layer[2].estimate == r.per_layer[0].estimate);
}

TEST_CASE("audit flags an estimate that increases") {
  // A 1-ball followed by a 2-ball in the same ambient space.
  const PointCloud line = embed_ambient(sample_uniform_ball(1, 2000, 1), 3, false, 0);
  const PointCloud disk = embed_ambient(sample_uniform_ball(2, 2000, 2), 3, false, 0);
  const LayerStack stack = LayerStack::with_uniform_depths("bad", {line, disk});
  AuditConfig cfg;
  cfg.tolerance = 0.25;
  const AuditReport r = audit_monotonicity(stack, cfg);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].layer == 1);
  CHECK(r.violations[0].increase == doctest::Approx(1.0).epsilon(0.2));
  CHECK(r.oracle_violation);

  cfg.run_oracle = false;
  const AuditReport quiet = audit_monotonicity(stack, cfg);
  CHECK_FALSE(quiet.per_layer[0].oracle.has_value());
  CHECK_FALSE(quiet.oracle_violation);
}

TEST_CASE("audit of a random network: oracle sequence is non-increasing") {
  const std::vector<LayerSpec> specs{linear(16), simple(LayerKind::Tanh), linear(16), simple(LayerKind::Relu)};
  for (std::uint64_t s = 0; s < 3; ++s) {
    const PointCloud ball = sample_uniform_ball(2, 10000, 40 + s);
    const LayerStack stack = pushforward(build_random_net(2, specs, 50 + s), ball);
    AuditConfig cfg;
    cfg.oracle_tolerance = 0.3;
    cfg.oracle_seed = s;
    CHECK_FALSE(audit_monotonicity(stack, cfg).oracle_violation);
  }
}

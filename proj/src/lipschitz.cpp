#include "idscope/lipschitz.hpp"

#include <algorithm>
#include <cmath>

#include "idscope/error.hpp"
#include "idscope/rng.hpp"
#include "idscope/synth.hpp"

namespace idscope {

double certified_spectral_norm(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return 0.0;
  Rng rng(0x5EED);
  Eigen::VectorXd v(w.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.1 * rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const Eigen::VectorXd u = w * v;
    const double next = u.squaredNorm();
    Eigen::VectorXd back = w.transpose() * u;
    const double nb = back.norm();
    if (nb == 0.0) break;
    v = back / nb;
    const bool done = std::abs(next - lambda) <= 1e-6 * next;
    lambda = next;
    if (done) break;
  }
  // The Rayleigh quotient approaches sigma_max^2 from below.
  return std::sqrt(lambda) * (1.0 + 1e-4);
}

namespace {

double bound_of(const LipschitzLayer::Kind& kind) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) {
          return certified_spectral_norm(m.weight);
        } else if constexpr (std::is_same_v<T, ResidualMap>) {
          double inner = 1.0;
          for (const auto& l : m.inner) inner *= l.lipschitz_bound();
          return 1.0 + inner;
        } else if constexpr (std::is_same_v<T, RmsNormMap>) {
          return m.gain.cwiseAbs().maxCoeff() / std::sqrt(m.eps);
        } else {
          return 1.0;  // ReLU, tanh
        }
      },
      kind);
}

}  // namespace

LipschitzLayer::LipschitzLayer(Kind kind) : kind_(std::move(kind)) {
  if (const auto* lin = std::get_if<LinearMap>(&kind_)) {
    if (!lin->weight.allFinite() || !lin->bias.allFinite()) throw Error(ErrorCode::NonFinite, "linear weights must be finite");
    if (lin->bias.size() != lin->weight.rows()) throw Error(ErrorCode::ShapeMismatch, "bias length differs from output width");
  }
  if (const auto* rms = std::get_if<RmsNormMap>(&kind_)) {
    if (!(rms->eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "RMS norm eps must be positive");
    if (rms->gain.size() == 0) throw Error(ErrorCode::InvalidArgument, "RMS norm gain is empty");
  }
  bound_ = bound_of(kind_);
}

std::string LipschitzLayer::name() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) return "linear";
        else if constexpr (std::is_same_v<T, ReluMap>) return "relu";
        else if constexpr (std::is_same_v<T, TanhMap>) return "tanh";
        else if constexpr (std::is_same_v<T, ResidualMap>) return "residual";
        else return "rmsnorm";
      },
      kind_);
}

std::size_t LipschitzLayer::output_dim(std::size_t input_dim) const {
  return std::visit(
      [input_dim](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) {
          if (static_cast<std::size_t>(m.weight.cols()) != input_dim) {
            throw Error(ErrorCode::ShapeMismatch, "linear layer expects width " + std::to_string(m.weight.cols()) +
                                                      ", got " + std::to_string(input_dim));
          }
          return static_cast<std::size_t>(m.weight.rows());
        } else if constexpr (std::is_same_v<T, ResidualMap>) {
          std::size_t w = input_dim;
          for (const auto& l : m.inner) w = l.output_dim(w);
          if (w != input_dim) throw Error(ErrorCode::ShapeMismatch, "residual branch changes the width");
          return input_dim;
        } else if constexpr (std::is_same_v<T, RmsNormMap>) {
          if (static_cast<std::size_t>(m.gain.size()) != input_dim) {
            throw Error(ErrorCode::ShapeMismatch, "RMS norm gain has the wrong width");
          }
          return input_dim;
        } else {
          return input_dim;
        }
      },
      kind_);
}

Matrix LipschitzLayer::apply(const Matrix& x) const {
  output_dim(static_cast<std::size_t>(x.cols()));
  return std::visit(
      [&x](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) {
          Matrix y = x * m.weight.transpose();
          y.rowwise() += m.bias.transpose();
          return y;
        } else if constexpr (std::is_same_v<T, ReluMap>) {
          return x.cwiseMax(0.0);
        } else if constexpr (std::is_same_v<T, TanhMap>) {
          return x.array().tanh().matrix();
        } else if constexpr (std::is_same_v<T, ResidualMap>) {
          Matrix branch = x;
          for (const auto& l : m.inner) branch = l.apply(branch);
          return x + branch;
        } else {
          Matrix y = x;
          const double width = static_cast<double>(x.cols());
          for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double scale = 1.0 / std::sqrt(m.eps + x.row(i).squaredNorm() / width);
            y.row(i) = (x.row(i).array() * m.gain.transpose().array() * scale).matrix();
          }
          return y;
        }
      },
      kind_);
}

double LipschitzNetwork::bound() const {
  double b = 1.0;
  for (const auto& l : layers) b *= l.lipschitz_bound();
  return b;
}

std::size_t LipschitzNetwork::output_dim() const {
  std::size_t w = input_dim;
  for (const auto& l : layers) w = l.output_dim(w);
  return w;
}

namespace {

LipschitzLayer build_layer(const LayerSpec& spec, std::size_t& width, std::uint64_t seed) {
  switch (spec.kind) {
    case LayerKind::Relu: return LipschitzLayer(ReluMap{});
    case LayerKind::Tanh: return LipschitzLayer(TanhMap{});
    case LayerKind::RmsNorm:
      return LipschitzLayer(RmsNormMap{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(width), spec.gain), spec.eps});
    case LayerKind::Residual: {
      ResidualMap res;
      std::size_t inner_width = width;
      for (std::size_t i = 0; i < spec.inner.size(); ++i) {
        res.inner.push_back(build_layer(spec.inner[i], inner_width, stream_seed(seed, i)));
      }
      if (inner_width != width) throw Error(ErrorCode::ShapeMismatch, "residual branch must preserve the width");
      return LipschitzLayer(std::move(res));
    }
    case LayerKind::Linear: {
      const std::size_t out = spec.out == 0 ? width : spec.out;
      const auto rows = static_cast<Eigen::Index>(out);
      const auto cols = static_cast<Eigen::Index>(width);
      Eigen::MatrixXd w;
      Rng rng(stream_seed(seed, 1));
      switch (spec.init) {
        case LinearInit::Gaussian: {
          w.resize(rows, cols);
          const double sd = spec.scale / std::sqrt(static_cast<double>(width));
          for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) w(r, c) = sd * rng.normal();
          break;
        }
        case LinearInit::Orthogonal: {
          // Orthonormal columns when widening (an isometric embedding), orthonormal rows otherwise.
          const std::size_t big = std::max(out, width), small = std::min(out, width);
          const Matrix q = random_orthonormal_columns(big, small, stream_seed(seed, 2));
          w = out >= width ? Eigen::MatrixXd(q) : Eigen::MatrixXd(q.transpose());
          w *= spec.scale;
          break;
        }
        case LinearInit::Identity: {
          if (out != width) throw Error(ErrorCode::ShapeMismatch, "identity layers must be square");
          w = spec.scale * Eigen::MatrixXd::Identity(rows, cols);
          break;
        }
      }
      Eigen::VectorXd b(rows);
      for (Eigen::Index r = 0; r < rows; ++r) b[r] = spec.bias_std * rng.normal();
      if (spec.bias_std == 0.0) b.setZero();
      width = out;
      return LipschitzLayer(LinearMap{std::move(w), std::move(b)});
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown layer kind");
}

}  // namespace

LipschitzNetwork build_random_net(std::size_t input_dim, const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  if (input_dim < 1) throw Error(ErrorCode::InvalidArgument, "input width must be >= 1");
  LipschitzNetwork net;
  net.input_dim = input_dim;
  std::size_t width = input_dim;
  for (std::size_t i = 0; i < specs.size(); ++i) net.layers.push_back(build_layer(specs[i], width, stream_seed(seed, i)));
  return net;
}

LayerStack pushforward(const LipschitzNetwork& net, const PointCloud& cloud, const std::string& model) {
  if (cloud.dim() != net.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "cloud width " + std::to_string(cloud.dim()) + " != network input " +
                                              std::to_string(net.input_dim));
  }
  std::optional<std::vector<std::string>> labels;
  if (cloud.has_labels()) labels = cloud.labels();

  std::vector<PointCloud> layers{cloud};
  std::vector<std::string> names{"input"};
  Matrix x = cloud.data();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    x = net.layers[i].apply(x);
    layers.emplace_back(x, labels);
    names.push_back(net.layers[i].name() + "_" + std::to_string(i + 1));
  }
  LayerStack uniform = LayerStack::with_uniform_depths(model, layers);
  std::vector<LayerInfo> info;
  for (std::size_t i = 0; i < layers.size(); ++i) info.push_back({names[i], uniform.info(i).relative_depth});
  return LayerStack(model, std::move(layers), std::move(info));
}

double max_pairwise_ratio(const PointCloud& input, const PointCloud& output, std::size_t pairs, std::uint64_t seed) {
  if (input.size() != output.size()) throw Error(ErrorCode::ShapeMismatch, "input and output differ in row count");
  if (input.size() < 2) throw Error(ErrorCode::TooFewPoints, "need two points for a ratio");
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto i = static_cast<Eigen::Index>(rng.below(input.size()));
    const auto j = static_cast<Eigen::Index>(rng.below(input.size()));
    const double din = (input.data().row(i) - input.data().row(j)).norm();
    if (i == j || din == 0.0) continue;
    const double dout = (output.data().row(i) - output.data().row(j)).norm();
    worst = std::max(worst, dout / din);
  }
  return worst;
}

std::vector<Violation> find_violations(std::span<const double> values, double tolerance) {
  std::vector<Violation> out;
  for (std::size_t l = 1; l < values.size(); ++l) {
    const double inc = values[l] - values[l - 1];
    if (inc > tolerance) out.push_back({l, inc});
  }
  return out;
}

AuditReport audit_monotonicity(const LayerStack& stack, const AuditConfig& cfg) {
  AuditReport report;
  std::vector<std::size_t> queries;
  if (cfg.run_oracle) queries = interior_points(stack.layer(0), cfg.oracle_queries, cfg.oracle_seed);

  std::vector<double> estimates, oracles;
  for (const auto& layer : stack.layers()) {
    LayerAudit row;
    if (cfg.estimator.method == Method::PointwiseOracle) {
      const auto q = queries.empty() ? interior_points(stack.layer(0), cfg.oracle_queries, cfg.oracle_seed) : queries;
      row.estimate = pointwise_dimension_mean(layer, q, cfg.oracle).value;
    } else {
      const NeighborTable table = knn_distances(layer, cfg.estimator.required_order(), false);
      const IdEstimate est = run_estimator(cfg.estimator, table);
      row.estimate = est.value;
      row.dropped_duplicates = est.dropped_duplicates;
    }
    if (cfg.run_oracle) {
      row.oracle = pointwise_dimension_mean(layer, queries, cfg.oracle).value;
      oracles.push_back(*row.oracle);
    }
    estimates.push_back(row.estimate);
    report.per_layer.push_back(row);
  }
  report.violations = find_violations(estimates, cfg.tolerance);
  if (cfg.run_oracle) {
    report.oracle_violations = find_violations(oracles, cfg.oracle_tolerance);
    report.oracle_violation = !report.oracle_violations.empty();
  }
  return report;
}

}  // namespace idscope

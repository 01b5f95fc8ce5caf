#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "idscope/estimators.hpp"
#include "idscope/point_cloud.hpp"

namespace idscope {

/// Upper bound on the spectral norm of w: power iteration on w^T w (relative
/// tolerance 1e-6, at most 1000 steps) times a 1 + 1e-4 safety factor.
double certified_spectral_norm(const Eigen::MatrixXd& w);

class LipschitzLayer;

struct LinearMap {
  Eigen::MatrixXd weight;  ///< out x in
  Eigen::VectorXd bias;
};
struct ReluMap {};
struct TanhMap {};
struct ResidualMap {
  std::vector<LipschitzLayer> inner;
};
/// y = gain * x / sqrt(eps + mean(x^2)); the Jacobian norm never exceeds
/// max|gain| / sqrt(eps), which makes the map globally Lipschitz.
struct RmsNormMap {
  Eigen::VectorXd gain;
  double eps = 1.0;
};

/// One map f_l with a certified upper bound on its Lipschitz constant.
class LipschitzLayer {
 public:
  using Kind = std::variant<LinearMap, ReluMap, TanhMap, ResidualMap, RmsNormMap>;

  explicit LipschitzLayer(Kind kind);

  const Kind& kind() const noexcept { return kind_; }
  double lipschitz_bound() const noexcept { return bound_; }
  std::string name() const;

  /// Output width for a given input width; throws ShapeMismatch.
  std::size_t output_dim(std::size_t input_dim) const;
  Matrix apply(const Matrix& x) const;

 private:
  Kind kind_;
  double bound_ = 1.0;
};

struct LipschitzNetwork {
  std::size_t input_dim = 0;
  std::vector<LipschitzLayer> layers;

  /// Product of the layer bounds.
  double bound() const;
  std::size_t output_dim() const;
};

enum class LayerKind { Linear, Relu, Tanh, Residual, RmsNorm };
enum class LinearInit { Gaussian, Orthogonal, Identity };

struct LayerSpec {
  LayerKind kind = LayerKind::Linear;
  std::size_t out = 0;  ///< Linear only; 0 keeps the width
  LinearInit init = LinearInit::Gaussian;
  double scale = 1.0;     ///< Linear: weight multiplier (Gaussian entries ~ N(0, scale^2 / fan_in))
  double bias_std = 0.0;  ///< Linear
  double gain = 1.0;      ///< RmsNorm
  double eps = 1.0;       ///< RmsNorm
  std::vector<LayerSpec> inner;  ///< Residual
};

/// Random network with Gaussian (or orthogonal / identity) linear weights; every
/// layer draws from its own seed stream.
LipschitzNetwork build_random_net(std::size_t input_dim, const std::vector<LayerSpec>& specs, std::uint64_t seed);

/// Input plus the output of every top-level layer.
LayerStack pushforward(const LipschitzNetwork& net, const PointCloud& cloud, const std::string& model = "synthetic");

/// Largest |f(x) - f(y)| / |x - y| over `pairs` random pairs of distinct, non-coincident rows.
double max_pairwise_ratio(const PointCloud& input, const PointCloud& output, std::size_t pairs, std::uint64_t seed);

struct Violation {
  std::size_t layer = 0;  ///< the later layer of the increasing pair
  double increase = 0.0;
};

/// Layers l with values[l] > values[l-1] + tolerance.
std::vector<Violation> find_violations(std::span<const double> values, double tolerance);

struct AuditConfig {
  EstimatorConfig estimator;
  double tolerance = 0.0;
  bool run_oracle = true;
  double oracle_tolerance = 0.25;
  std::size_t oracle_queries = 50;
  std::uint64_t oracle_seed = 0;
  PointwiseOptions oracle = fine_scale_oracle();
};

struct LayerAudit {
  double estimate = 0.0;
  std::optional<double> oracle;
  std::size_t dropped_duplicates = 0;
};

struct AuditReport {
  std::vector<LayerAudit> per_layer;
  std::vector<Violation> violations;
  std::vector<Violation> oracle_violations;
  bool oracle_violation = false;
  std::optional<double> network_bound;
};

/// Runs the estimator (and the pointwise oracle at interior query points of
/// layer 0) on every layer and flags increases beyond the tolerances.
AuditReport audit_monotonicity(const LayerStack& stack, const AuditConfig& cfg);

}  // namespace idscope

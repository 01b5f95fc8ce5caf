#include "idscope/synth.hpp"

#include <cmath>

#include <Eigen/QR>

#include "idscope/error.hpp"
#include "idscope/rng.hpp"

namespace idscope {

namespace {

// Stream ids, so that generators never share random numbers.
constexpr std::uint64_t kRotationStream = 0x524f54;  // "ROT"
constexpr std::uint64_t kVocabStream = 0x564f43;     // "VOC"
constexpr std::uint64_t kDrawStream = 0x445257;      // "DRW"

Matrix orthonormal_from_gaussian(std::size_t dim, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

}  // namespace

PointCloud sample_uniform_ball(std::size_t dim, std::size_t n, std::uint64_t seed) {
  if (dim < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "ball sampling needs dim >= 1 and n >= 1");
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  const double inv_dim = 1.0 / static_cast<double>(dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    do {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
      sq = x.row(i).squaredNorm();
    } while (sq == 0.0);
    const double radius = std::pow(rng.uniform(), inv_dim);
    x.row(i) *= radius / std::sqrt(sq);
  }
  return PointCloud(std::move(x));
}

Matrix random_orthogonal(std::size_t dim, std::uint64_t seed) { return orthonormal_from_gaussian(dim, dim, seed); }

Matrix random_orthonormal_columns(std::size_t dim, std::size_t cols, std::uint64_t seed) {
  if (cols > dim) throw Error(ErrorCode::InvalidArgument, "more orthonormal columns than dimensions");
  return orthonormal_from_gaussian(dim, cols, seed);
}

PointCloud embed_ambient(const PointCloud& cloud, std::size_t ambient, bool rotate, std::uint64_t seed) {
  const std::size_t dim = cloud.dim();
  if (ambient < dim) {
    throw Error(ErrorCode::AmbientTooSmall,
                "ambient " + std::to_string(ambient) + " is smaller than cloud dimension " + std::to_string(dim));
  }
  std::optional<std::vector<std::string>> labels;
  if (cloud.has_labels()) labels = cloud.labels();

  if (!rotate) {
    Matrix out = Matrix::Zero(cloud.data().rows(), static_cast<Eigen::Index>(ambient));
    out.leftCols(cloud.data().cols()) = cloud.data();
    return PointCloud(std::move(out), std::move(labels));
  }
  // y = Q [x; 0] only touches the first dim columns of Q.
  const Matrix q = random_orthonormal_columns(ambient, dim, stream_seed(seed, kRotationStream));
  Matrix out = cloud.data() * q.transpose();
  return PointCloud(std::move(out), std::move(labels));
}

void ManifoldSpec::validate() const {
  if (ambient_dim < 1) throw Error(ErrorCode::InvalidArgument, "ambient_dim must be >= 1");
  if (kind == ManifoldKind::FiniteVocabulary) {
    if (vocabulary_size < 1) throw Error(ErrorCode::InvalidArgument, "vocabulary_size must be >= 1");
    if (n_points.size() != 1 || n_points[0] < 1) throw Error(ErrorCode::InvalidArgument, "need one positive n_points");
    return;
  }
  if (intrinsic_dims.empty()) throw Error(ErrorCode::InvalidArgument, "no components");
  if (kind == ManifoldKind::UniformBall && intrinsic_dims.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "UniformBall takes exactly one intrinsic dimension");
  }
  if (n_points.size() != intrinsic_dims.size()) {
    throw Error(ErrorCode::InvalidArgument, "n_points must list one count per component");
  }
  for (std::size_t i = 0; i < intrinsic_dims.size(); ++i) {
    if (intrinsic_dims[i] < 1) throw Error(ErrorCode::InvalidArgument, "intrinsic dimensions must be >= 1");
    if (intrinsic_dims[i] > ambient_dim) {
      throw Error(ErrorCode::AmbientTooSmall, "intrinsic dimension " + std::to_string(intrinsic_dims[i]) +
                                                  " exceeds ambient " + std::to_string(ambient_dim));
    }
    if (n_points[i] < 1) throw Error(ErrorCode::InvalidArgument, "component sizes must be >= 1");
  }
  if (!offsets.empty()) {
    if (offsets.size() != intrinsic_dims.size()) {
      throw Error(ErrorCode::InvalidArgument, "offsets must list one translation per component");
    }
    for (const auto& o : offsets) {
      if (o.size() > ambient_dim) throw Error(ErrorCode::InvalidArgument, "offset longer than ambient_dim");
    }
  }
}

namespace {

Eigen::RowVectorXd offset_of(const ManifoldSpec& spec, std::size_t component) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(spec.ambient_dim));
  if (spec.offsets.empty()) {
    v[0] = 4.0 * static_cast<double>(component);
  } else {
    const auto& o = spec.offsets[component];
    for (std::size_t j = 0; j < o.size(); ++j) v[static_cast<Eigen::Index>(j)] = o[j];
  }
  return v;
}

}  // namespace

PointCloud sample_union(const ManifoldSpec& spec) {
  spec.validate();
  const std::size_t parts = spec.intrinsic_dims.size();
  std::vector<Eigen::RowVectorXd> offsets;
  for (std::size_t i = 0; i < parts; ++i) offsets.push_back(offset_of(spec, i));
  for (std::size_t i = 0; i < parts; ++i) {
    for (std::size_t j = i + 1; j < parts; ++j) {
      const double gap = (offsets[i] - offsets[j]).norm();
      if (!(gap > 2.0)) {
        throw Error(ErrorCode::OverlappingComponents, "components " + std::to_string(i) + " and " + std::to_string(j) +
                                                          " are " + std::to_string(gap) + " apart; unit balls need > 2");
      }
    }
  }

  std::size_t total = 0;
  for (auto c : spec.n_points) total += c;
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(spec.ambient_dim));
  std::vector<std::string> labels;
  labels.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    const PointCloud ball = sample_uniform_ball(spec.intrinsic_dims[i], spec.n_points[i], stream_seed(spec.seed, i));
    const auto rows = static_cast<Eigen::Index>(spec.n_points[i]);
    x.block(row, 0, rows, ball.data().cols()) = ball.data();
    x.middleRows(row, rows).rowwise() += offsets[i];
    labels.insert(labels.end(), spec.n_points[i], std::to_string(i));
    row += rows;
  }
  PointCloud cloud(std::move(x), std::move(labels));
  if (!spec.rotate) return cloud;

  const Matrix q = random_orthogonal(spec.ambient_dim, stream_seed(spec.seed, kRotationStream));
  Matrix rotated = cloud.data() * q.transpose();
  return PointCloud(std::move(rotated), cloud.labels());
}

PointCloud sample_finite_vocabulary(std::size_t vocabulary, std::size_t ambient, std::size_t n, std::uint64_t seed) {
  if (vocabulary < 1) throw Error(ErrorCode::InvalidArgument, "vocabulary size must be >= 1");
  if (ambient < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "need ambient >= 1 and n >= 1");
  Rng atoms_rng(stream_seed(seed, kVocabStream));
  Matrix atoms(static_cast<Eigen::Index>(vocabulary), static_cast<Eigen::Index>(ambient));
  for (Eigen::Index i = 0; i < atoms.rows(); ++i)
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) atoms(i, j) = atoms_rng.normal();

  Rng draws(stream_seed(seed, kDrawStream));
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ambient));
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = atoms.row(static_cast<Eigen::Index>(draws.below(vocabulary)));
  return PointCloud(std::move(x));
}

PointCloud generate(const ManifoldSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ManifoldKind::FiniteVocabulary:
      return sample_finite_vocabulary(spec.vocabulary_size, spec.ambient_dim, spec.n_points[0], spec.seed);
    case ManifoldKind::UnionOfBalls:
      return sample_union(spec);
    case ManifoldKind::UniformBall: {
      PointCloud ball = sample_uniform_ball(spec.intrinsic_dims[0], spec.n_points[0], spec.seed);
      PointCloud embedded = embed_ambient(ball, spec.ambient_dim, spec.rotate, spec.seed);
      if (spec.offsets.empty()) return embedded;
      Matrix x = embedded.data();
      x.rowwise() += offset_of(spec, 0);
      return PointCloud(std::move(x));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown manifold kind");
}

}  // namespace idscope

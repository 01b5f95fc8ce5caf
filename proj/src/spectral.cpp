#include "idscope/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "idscope/error.hpp"

namespace idscope {

namespace {

Eigen::MatrixXd prepared(const PointCloud& cloud, bool center) {
  if (!cloud.all_finite()) throw Error(ErrorCode::NonFinite, "cloud contains NaN or Inf");
  Eigen::MatrixXd z = cloud.data();
  if (center) z.rowwise() -= z.colwise().mean();
  return z;
}

Eigen::VectorXd apply_cutoff(Eigen::VectorXd values) {
  std::sort(values.data(), values.data() + values.size(), std::greater<>());
  if (values.size() == 0 || !(values[0] > 0.0)) return Eigen::VectorXd();
  const double floor = kEigenCutoff * values[0];
  Eigen::Index kept = 0;
  while (kept < values.size() && values[kept] >= floor) ++kept;
  return values.head(kept);
}

}  // namespace

Eigen::VectorXd gram_spectrum(const PointCloud& cloud, bool center, SpectrumRoute route) {
  const Eigen::MatrixXd z = prepared(cloud, center);
  if (route == SpectrumRoute::Gram) {
    const Eigen::MatrixXd q = z * z.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
    return apply_cutoff(eig.eigenvalues().cwiseMax(0.0));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(z);
  return apply_cutoff(svd.singularValues().array().square().matrix());
}

double spectral_entropy(std::span<const double> eigenvalues) {
  double total = 0.0;
  for (double v : eigenvalues) total += v;
  if (!(total > 0.0)) return 0.0;
  double s = 0.0;
  for (double v : eigenvalues) {
    if (v <= 0.0) continue;
    const double p = v / total;
    s -= p * std::log(p);
  }
  return std::max(0.0, s);
}

SpectralSummary von_neumann_entropy(const PointCloud& cloud, bool center, SpectrumRoute route) {
  const Eigen::VectorXd lambda = gram_spectrum(cloud, center, route);
  SpectralSummary out;
  out.rank = static_cast<std::size_t>(lambda.size());
  if (lambda.size() == 0) {
    out.all_zero = true;
    return out;
  }
  out.entropy = out.rank == 1 ? 0.0 : spectral_entropy({lambda.data(), static_cast<std::size_t>(lambda.size())});
  const Eigen::VectorXd sigma = lambda.cwiseSqrt();
  out.effective_rank =
      out.rank == 1 ? 1.0 : std::exp(spectral_entropy({sigma.data(), static_cast<std::size_t>(sigma.size())}));
  return out;
}

double effective_rank(const PointCloud& cloud, bool center) { return von_neumann_entropy(cloud, center).effective_rank; }

}  // namespace idscope

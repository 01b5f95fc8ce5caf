#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace idscope {

/// Row-major dense matrix: one point per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// An n x D sample of representation vectors, optionally with one class tag per row.
///
/// Immutable after construction. The constructor checks shape invariants only;
/// finiteness is reported by validate_cloud and enforced by the numeric kernels.
class PointCloud {
 public:
  explicit PointCloud(Matrix data, std::optional<std::vector<std::string>> labels = std::nullopt);

  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }

  const Matrix& data() const noexcept { return data_; }
  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<std::string>& labels() const;

  bool all_finite() const;

 private:
  Matrix data_;
  std::optional<std::vector<std::string>> labels_;
};

struct ValidationReport {
  std::size_t non_finite_rows = 0;
  std::size_t duplicate_rows = 0;  ///< rows bitwise equal to an earlier row
  std::size_t zero_rows = 0;

  bool ok() const noexcept { return non_finite_rows == 0 && duplicate_rows == 0 && zero_rows == 0; }
};

ValidationReport validate_cloud(const PointCloud& cloud);

struct LabeledCloud {
  std::string label;
  PointCloud cloud;
};

/// One cloud per distinct label, in order of first appearance; row order within
/// a class is preserved.
std::vector<LabeledCloud> split_by_label(const PointCloud& cloud);

struct LayerInfo {
  std::string name;
  double relative_depth = 0.0;
};

/// The same n samples traced through consecutive layers.
class LayerStack {
 public:
  LayerStack(std::string model, std::vector<PointCloud> layers, std::vector<LayerInfo> info);

  /// Names layers "layer_000".. and spaces relative depths evenly over [0, 1].
  static LayerStack with_uniform_depths(std::string model, std::vector<PointCloud> layers);

  const std::string& model() const noexcept { return model_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t num_points() const noexcept { return layers_.front().size(); }
  const PointCloud& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<PointCloud>& layers() const noexcept { return layers_; }
  const LayerInfo& info(std::size_t i) const { return info_.at(i); }

 private:
  std::string model_;
  std::vector<PointCloud> layers_;
  std::vector<LayerInfo> info_;
};

}  // namespace idscope

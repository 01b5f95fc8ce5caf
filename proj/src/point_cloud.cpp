#include "idscope/point_cloud.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string_view>
#include <unordered_map>

#include "idscope/error.hpp"

namespace idscope {

PointCloud::PointCloud(Matrix data, std::optional<std::vector<std::string>> labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "point cloud needs at least one row and one column");
  }
  if (labels_ && labels_->size() != size()) {
    throw Error(ErrorCode::ShapeMismatch, "label count " + std::to_string(labels_->size()) +
                                              " does not match row count " + std::to_string(size()));
  }
}

const std::vector<std::string>& PointCloud::labels() const {
  if (!labels_) throw Error(ErrorCode::NoLabels, "cloud carries no labels");
  return *labels_;
}

bool PointCloud::all_finite() const { return data_.allFinite(); }

namespace {

struct RowBytes {
  const double* ptr;
  std::size_t len;
  bool operator==(const RowBytes& o) const {
    return len == o.len && std::memcmp(ptr, o.ptr, len * sizeof(double)) == 0;
  }
};

struct RowBytesHash {
  std::size_t operator()(const RowBytes& r) const {
    return std::hash<std::string_view>{}(
        std::string_view(reinterpret_cast<const char*>(r.ptr), r.len * sizeof(double)));
  }
};

}  // namespace

ValidationReport validate_cloud(const PointCloud& cloud) {
  ValidationReport report;
  const Matrix& m = cloud.data();
  std::unordered_map<RowBytes, std::size_t, RowBytesHash> seen;
  seen.reserve(cloud.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    if (!row.allFinite()) ++report.non_finite_rows;
    if ((row.array() == 0.0).all()) ++report.zero_rows;
    // Bitwise equality: -0.0 and 0.0 are distinct rows here.
    RowBytes key{m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
    if (!seen.emplace(key, static_cast<std::size_t>(i)).second) ++report.duplicate_rows;
  }
  return report;
}

std::vector<LabeledCloud> split_by_label(const PointCloud& cloud) {
  const auto& labels = cloud.labels();
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Eigen::Index>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = rows.try_emplace(labels[i]);
    if (inserted) order.push_back(labels[i]);
    it->second.push_back(static_cast<Eigen::Index>(i));
  }

  std::vector<LabeledCloud> out;
  out.reserve(order.size());
  for (const auto& label : order) {
    const auto& idx = rows.at(label);
    Matrix sub(static_cast<Eigen::Index>(idx.size()), cloud.data().cols());
    for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = cloud.data().row(idx[r]);
    out.push_back({label, PointCloud(std::move(sub), std::vector<std::string>(idx.size(), label))});
  }
  return out;
}

LayerStack::LayerStack(std::string model, std::vector<PointCloud> layers, std::vector<LayerInfo> info)
    : model_(std::move(model)), layers_(std::move(layers)), info_(std::move(info)) {
  if (layers_.empty()) throw Error(ErrorCode::EmptyStack, "layer stack has no layers");
  if (info_.size() != layers_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "layer metadata count does not match layer count");
  }
  const std::size_t n = layers_.front().size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].size() != n) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " has " +
                                                std::to_string(layers_[i].size()) + " rows, expected " +
                                                std::to_string(n));
    }
    const double depth = info_[i].relative_depth;
    if (!(depth >= 0.0 && depth <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "relative depth outside [0, 1]");
    }
  }
  if (layers_.size() > 1) {
    if (info_.front().relative_depth != 0.0 || info_.back().relative_depth != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "relative depths must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < info_.size(); ++i) {
      if (!(info_[i].relative_depth > info_[i - 1].relative_depth)) {
        throw Error(ErrorCode::InvalidArgument, "relative depths must be strictly increasing");
      }
    }
  }
}

LayerStack LayerStack::with_uniform_depths(std::string model, std::vector<PointCloud> layers) {
  std::vector<LayerInfo> info;
  const std::size_t count = layers.size();
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "layer_%03zu", i);
    const double depth = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    info.push_back({name, depth});
  }
  return LayerStack(std::move(model), std::move(layers), std::move(info));
}

}  // namespace idscope

#pragma once
// Shared fixtures and independent reference computations for the unit tests.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "idscope/point_cloud.hpp"

namespace testing {

using idscope::Matrix;
using idscope::PointCloud;

// std:: distributions, deliberately not the library's Rng.
inline Matrix gaussian_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = nd(g);
  return m;
}

inline PointCloud gaussian_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return PointCloud(gaussian_matrix(n, dim, seed));
}

// Sorted (squared distance, index) of every other point, summed in index order.
inline std::vector<std::pair<double, std::size_t>> brute_force_row(const Matrix& x, std::size_t i) {
  std::vector<std::pair<double, std::size_t>> all;
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (static_cast<std::size_t>(j) == i) continue;
    double acc = 0.0;
    for (Eigen::Index a = 0; a < x.cols(); ++a) {
      const double d = x(static_cast<Eigen::Index>(i), a) - x(j, a);
      acc += d * d;
    }
    all.emplace_back(acc, static_cast<std::size_t>(j));
  }
  std::sort(all.begin(), all.end());
  return all;
}

// Distances T_1..T_k of every point, by brute force.
inline std::vector<std::vector<double>> brute_force_knn(const Matrix& x, std::size_t k) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = brute_force_row(x, i);
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(std::sqrt(row[r].first));
  }
  return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("idscope_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing

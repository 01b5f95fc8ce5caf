#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "idscope/estimators.hpp"

namespace idscope {

struct SweepRow {
  std::size_t true_dim = 0;
  std::size_t ambient_dim = 0;
  std::string method;
  double mean = 0.0;
  double ci_low = 0.0;   ///< mean - 1.96 std / sqrt(reps)
  double ci_high = 0.0;
  std::vector<double> estimates;  ///< one per replicate, in replicate order
};

struct BiasSweepConfig {
  std::vector<std::size_t> dims{2, 5, 10, 20, 50};
  std::size_t n = 5000;
  std::size_t reps = 20;
  std::vector<EstimatorConfig> methods{parse_estimator("twonn"), parse_estimator("mle:k=20")};
  std::uint64_t seed = 0;
};

/// Uniform d-balls for each d; replicate r draws from stream_seed(seed, r).
/// Rows are ordered by dimension, then method.
std::vector<SweepRow> sweep_bias(const BiasSweepConfig& cfg);

struct AmbientSweepConfig {
  std::size_t true_dim = 50;
  std::vector<std::size_t> ambient{64, 512, 2048};
  std::size_t n = 5000;
  std::size_t reps = 10;
  bool rotate = true;
  std::vector<EstimatorConfig> methods{parse_estimator("twonn"), parse_estimator("mle:k=20")};
  std::uint64_t seed = 0;
};

/// A true_dim-ball embedded in each ambient size; rows ordered by ambient, then method.
std::vector<SweepRow> sweep_ambient(const AmbientSweepConfig& cfg);

/// (max - min) / mean of the per-ambient means of one method.
double relative_spread(const std::vector<SweepRow>& rows, const std::string& method);

/// Columns: true_dim, ambient_dim, method, mean, ci_low, ci_high, reps.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace idscope

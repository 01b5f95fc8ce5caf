#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "idscope/point_cloud.hpp"

namespace idscope {

// NREP layer file: "NREP" | u32 version | u64 rows | u64 cols | rows*cols float32,
// all little-endian, row-major. A dump directory holds one NREP file per layer
// plus manifest.json indexing them.

inline constexpr std::uint32_t kNrepVersion = 1;
inline constexpr std::size_t kNrepHeaderBytes = 24;
inline constexpr const char* kManifestName = "manifest.json";

/// Writes one layer; values are rounded to float32.
void write_nrep(const Matrix& data, const std::filesystem::path& file);
Matrix read_nrep(const std::filesystem::path& file);

void write_dump(const LayerStack& stack, const std::filesystem::path& dir);
LayerStack read_dump(const std::filesystem::path& dir);

/// Header-less CSV, one point per line.
PointCloud read_csv(const std::filesystem::path& file);

}  // namespace idscope

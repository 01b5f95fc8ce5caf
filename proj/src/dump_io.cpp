#include "idscope/dump_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "idscope/error.hpp"

namespace idscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void put_le(std::vector<unsigned char>& buf, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    buf.push_back(static_cast<unsigned char>((value >> (8 * b)) & 0xFF));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(p[b]) << (8 * b);
  return value;
}

std::vector<unsigned char> slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& file, const std::vector<unsigned char>& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + file.string());
}

std::string layer_file_name(std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof(name), "layer_%03zu.nrep", i);
  return name;
}

}  // namespace

void write_nrep(const Matrix& data, const fs::path& file) {
  std::vector<unsigned char> buf;
  buf.reserve(kNrepHeaderBytes + static_cast<std::size_t>(data.size()) * 4);
  buf.insert(buf.end(), {'N', 'R', 'E', 'P'});
  put_le<std::uint32_t>(buf, kNrepVersion);
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(data.rows()));
  put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(data.cols()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(data(i, j))));
    }
  }
  write_bytes(file, buf);
}

Matrix read_nrep(const fs::path& file) {
  const auto bytes = slurp(file);
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, file.string() + " is shorter than the magic");
  if (std::memcmp(bytes.data(), "NREP", 4) != 0) throw Error(ErrorCode::BadMagic, file.string());
  if (bytes.size() < kNrepHeaderBytes) {
    throw Error(ErrorCode::TruncatedFile, file.string() + " is shorter than the header");
  }
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kNrepVersion) {
    throw Error(ErrorCode::VersionUnsupported, file.string() + " has version " + std::to_string(version));
  }
  const auto rows = get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = get_le<std::uint64_t>(bytes.data() + 16);
  const std::uint64_t payload = bytes.size() - kNrepHeaderBytes;
  if (cols != 0 && rows > payload / 4 / cols) {
    throw Error(ErrorCode::TruncatedFile, file.string() + " payload shorter than " + std::to_string(rows) + "x" +
                                              std::to_string(cols));
  }
  if (payload != rows * cols * 4) {
    throw Error(ErrorCode::ShapeMismatch, file.string() + " has trailing bytes after the payload");
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* p = bytes.data() + kNrepHeaderBytes;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j, p += 4) {
      out(i, j) = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
    }
  }
  return out;
}

void write_dump(const LayerStack& stack, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["version"] = kNrepVersion;
  manifest["model"] = stack.model();
  manifest["dtype"] = "float32";
  json layers = json::array();
  for (std::size_t i = 0; i < stack.num_layers(); ++i) {
    const auto& cloud = stack.layer(i);
    const std::string file = layer_file_name(i);
    write_nrep(cloud.data(), dir / file);
    layers.push_back({{"name", stack.info(i).name},
                      {"relative_depth", stack.info(i).relative_depth},
                      {"file", file},
                      {"rows", cloud.size()},
                      {"cols", cloud.dim()}});
  }
  manifest["layers"] = std::move(layers);

  const auto& first = stack.layer(0);
  if (first.has_labels()) {
    std::ofstream out(dir / "labels.txt", std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write labels");
    for (const auto& l : first.labels()) out << l << '\n';
    manifest["labels"] = "labels.txt";
  }

  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "short write of manifest");
}

LayerStack read_dump(const fs::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw Error(ErrorCode::IoFailure, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed manifest: ") + e.what());
  }

  try {
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kNrepVersion) {
      throw Error(ErrorCode::VersionUnsupported, "manifest version " + std::to_string(version));
    }
    if (manifest.contains("dtype") && manifest["dtype"] != "float32") {
      throw Error(ErrorCode::VersionUnsupported, "dtype " + manifest["dtype"].dump());
    }

    std::optional<std::vector<std::string>> labels;
    if (manifest.contains("labels")) {
      std::ifstream lf(dir / manifest["labels"].get<std::string>());
      if (!lf) throw Error(ErrorCode::IoFailure, "cannot open labels file");
      labels.emplace();
      for (std::string line; std::getline(lf, line);) labels->push_back(line);
    }

    std::vector<PointCloud> layers;
    std::vector<LayerInfo> info;
    for (const auto& entry : manifest.at("layers")) {
      Matrix data = read_nrep(dir / entry.at("file").get<std::string>());
      const auto rows = entry.at("rows").get<std::uint64_t>();
      const auto cols = entry.at("cols").get<std::uint64_t>();
      if (static_cast<std::uint64_t>(data.rows()) != rows || static_cast<std::uint64_t>(data.cols()) != cols) {
        throw Error(ErrorCode::ShapeMismatch, "manifest says " + std::to_string(rows) + "x" + std::to_string(cols) +
                                                  ", " + entry.at("file").get<std::string>() + " holds " +
                                                  std::to_string(data.rows()) + "x" + std::to_string(data.cols()));
      }
      layers.emplace_back(std::move(data), labels);
      info.push_back({entry.at("name").get<std::string>(), entry.at("relative_depth").get<double>()});
    }
    return LayerStack(manifest.value("model", std::string{}), std::move(layers), std::move(info));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed manifest: ") + e.what());
  }
}

PointCloud read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + file.string());
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Eigen::Index count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string_view field(line.data() + pos, end - pos);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      auto [ptr, err] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (err != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    file.string() + ":" + std::to_string(rows + 1) + ": bad number '" + std::string(field) + "'");
      }
      values.push_back(v);
      ++count;
      pos = end + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw Error(ErrorCode::ShapeMismatch, file.string() + ":" + std::to_string(rows + 1) + ": expected " +
                                                std::to_string(cols) + " columns");
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::TruncatedFile, file.string() + " holds no points");
  Matrix m = Eigen::Map<Matrix>(values.data(), rows, cols);
  return PointCloud(std::move(m));
}

}  // namespace idscope

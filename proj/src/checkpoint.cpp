#include "sldsgcn/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sldsgcn/errors.hpp"

namespace sldsgcn {
namespace {

constexpr char kMagic[] = "SLDSGCN-CKPT-1\n";

}  // namespace

void save_checkpoint(
    const std::string& path, const std::string& meta_json,
    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& tensors) {
  nlohmann::json header;
  header["meta"] =
      meta_json.empty() ? nlohmann::json::object()
                        : nlohmann::json::parse(meta_json);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, value] : tensors)
    list.push_back({{"name", name},
                    {"rows", value.rows()},
                    {"cols", value.cols()}});
  header["tensors"] = list;
  const std::string header_str = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw LoadError("cannot open for writing: " + tmp);
    f.write(kMagic, sizeof(kMagic) - 1);
    const uint64_t len = header_str.size();
    f.write(reinterpret_cast<const char*>(&len), sizeof(len));
    f.write(header_str.data(), static_cast<std::streamsize>(len));
    for (const auto& [name, value] : tensors) {
      for (Eigen::Index i = 0; i < value.rows(); ++i)
        for (Eigen::Index j = 0; j < value.cols(); ++j) {
          const double d = value(i, j);
          f.write(reinterpret_cast<const char*>(&d), sizeof(d));
        }
    }
    if (!f) throw LoadError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f || std::string(magic, sizeof(magic)) != std::string(kMagic).substr(0, sizeof(magic)))
    throw LoadError("not a checkpoint file: " + path);
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!f || len > (1u << 30)) throw LoadError("corrupt checkpoint header: " + path);
  std::string header_str(len, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!f) throw LoadError("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("bad checkpoint header: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.meta_json = header.at("meta").dump();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0)
      throw LoadError("bad tensor shape in checkpoint: " + name);
    Eigen::MatrixXd value(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        double d = 0.0;
        f.read(reinterpret_cast<char*>(&d), sizeof(d));
        value(i, j) = d;
      }
    if (!f) throw LoadError("truncated tensor data: " + name);
    ckpt.tensors.emplace_back(name, std::move(value));
  }
  return ckpt;
}

}  // namespace sldsgcn

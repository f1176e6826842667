#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "tee/jsonio.hpp"
#include "tee/tensor.hpp"

namespace tee {

// Parameter container: 8-byte magic, u64 little-endian manifest length, JSON
// manifest (dtype plus every tensor's name and shape, in storage order), then
// the raw column-major tensor data back to back. Loading is bit-exact.
inline constexpr char kCheckpointMagic[8] = {'T', 'E', 'E', 'C', 'K', 'P', 'T', '1'};

template <typename S>
const char* checkpoint_dtype() {
  if constexpr (std::is_same_v<S, float>) return "f32";
  else if constexpr (std::is_same_v<S, double>) return "f64";
  else static_assert(sizeof(S) == 0, "unsupported checkpoint scalar");
}

template <typename S>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<ParamRef<S>>& params,
                     const Json& meta = Json::object()) {
  Json manifest;
  manifest["version"] = 1;
  manifest["dtype"] = checkpoint_dtype<S>();
  manifest["meta"] = meta;
  manifest["tensors"] = Json::array();
  for (const auto& p : params) {
    Json t;
    t["name"] = p.name;
    t["rows"] = p.value->rows();
    t["cols"] = p.value->cols();
    manifest["tensors"].push_back(t);
  }
  const std::string header = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot open for writing " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  uint64_t len = header.size();
  unsigned char len_le[8];
  for (int i = 0; i < 8; ++i) len_le[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(len_le), 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& p : params)
    out.write(reinterpret_cast<const char*>(p.value->data()),
              static_cast<std::streamsize>(sizeof(S) * p.value->size()));
  require(out.good(), ErrorKind::io, "write failed: " + path.string());
}

// Fills the given params in place; names and shapes must match the manifest
// exactly and in order. Returns the manifest's meta block.
template <typename S>
Json load_checkpoint(const std::filesystem::path& path,
                     const std::vector<ParamRef<S>>& params) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
          ErrorKind::integrity, path.string() + ": not a parameter checkpoint");
  unsigned char len_le[8];
  in.read(reinterpret_cast<char*>(len_le), 8);
  uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<uint64_t>(len_le[i]) << (8 * i);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  require(in.good(), ErrorKind::integrity, path.string() + ": truncated manifest");

  Json manifest;
  try {
    manifest = Json::parse(header);
  } catch (const Json::exception& e) {
    fail(ErrorKind::integrity, path.string() + ": bad manifest: " + e.what());
  }
  require(manifest.value("dtype", "") == checkpoint_dtype<S>(), ErrorKind::integrity,
          path.string() + ": dtype mismatch");
  const auto& tensors = manifest.at("tensors");
  require(tensors.size() == params.size(), ErrorKind::integrity,
          path.string() + ": expected " + std::to_string(params.size()) +
              " tensors, file has " + std::to_string(tensors.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    require(t.value("name", "") == params[i].name, ErrorKind::integrity,
            path.string() + ": tensor " + std::to_string(i) + " is '" +
                t.value("name", "") + "', expected '" + params[i].name + "'");
    const Eigen::Index rows = t.value("rows", Eigen::Index(0));
    const Eigen::Index cols = t.value("cols", Eigen::Index(0));
    require(rows == params[i].value->rows() && cols == params[i].value->cols(),
            ErrorKind::integrity, path.string() + ": shape mismatch for " + params[i].name);
    in.read(reinterpret_cast<char*>(params[i].value->data()),
            static_cast<std::streamsize>(sizeof(S) * rows * cols));
  }
  require(in.good(), ErrorKind::integrity, path.string() + ": truncated tensor data");
  return manifest.value("meta", Json::object());
}

// Order-sensitive fingerprint of parameter bytes; used for freeze checks.
template <typename S>
std::string params_hash_hex(const std::vector<ParamRef<S>>& params) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* data, size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& p : params)
    mix(p.value->data(), sizeof(S) * static_cast<size_t>(p.value->size()));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tee

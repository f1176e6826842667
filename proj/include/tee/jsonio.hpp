#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "tee/error.hpp"

namespace tee {

using Json = nlohmann::json;

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// Strict-schema helper: every key of `obj` must appear in `allowed`.
void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& context);

template <typename T>
T get_required(const Json& obj, const char* key, const std::string& context) {
  require(obj.contains(key), ErrorKind::schema,
          context + ": missing required key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::schema, context + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, const T& fallback,
         const std::string& context) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::schema, context + ": bad value for '" + key + "': " + e.what());
  }
}

// FNV-1a, 64-bit; artifact fingerprinting for manifests (not security).
uint64_t fnv1a64(const void* data, size_t size);
std::string file_hash_hex(const std::filesystem::path& path);
std::string string_hash_hex(const std::string& text);

}  // namespace tee

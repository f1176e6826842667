#include "tee/jsonio.hpp"

#include <fstream>
#include <sstream>

namespace tee {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot open for writing " + path.string());
  out << value.dump(2) << "\n";
  require(out.good(), ErrorKind::io, "write failed: " + path.string());
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
  require(obj.is_object(), ErrorKind::schema, context + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    require(ok, ErrorKind::schema, context + ": unknown key '" + key + "'");
  }
}

uint64_t fnv1a64(const void* data, size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string string_hash_hex(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot hash " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return string_hash_hex(ss.str());
}

}  // namespace tee

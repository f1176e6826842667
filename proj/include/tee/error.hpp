#pragma once

#include <stdexcept>
#include <string>

namespace tee {

// Error taxonomy used across the library. The CLI maps categories to exit
// codes: config/schema -> 3, anything else -> 1 (usage errors are handled by
// the argument parser itself).
enum class ErrorKind {
  invalid_geometry,
  domain,
  shape,
  config,
  schema,
  lifecycle,
  contract,
  integrity,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_geometry: return "invalid_geometry";
    case ErrorKind::domain: return "domain";
    case ErrorKind::shape: return "shape";
    case ErrorKind::config: return "config";
    case ErrorKind::schema: return "schema";
    case ErrorKind::lifecycle: return "lifecycle";
    case ErrorKind::contract: return "contract";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) fail(kind, message);
}

}  // namespace tee

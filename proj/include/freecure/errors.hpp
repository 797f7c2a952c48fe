#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freecure {

enum class ErrorKind {
  invalid_argument,
  numeric,
  invalid_prompt,
  invalid_state,
  capability,
  format,
  no_records,
  manifest,
  backend,
  io,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numeric: return "numeric-error";
    case ErrorKind::invalid_prompt: return "invalid-prompt";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::capability: return "capability-error";
    case ErrorKind::format: return "format-error";
    case ErrorKind::no_records: return "no-records";
    case ErrorKind::manifest: return "manifest-error";
    case ErrorKind::backend: return "backend-error";
    case ErrorKind::io: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 protected:
  struct Verbatim {};
  Error(ErrorKind kind, const std::string& what, Verbatim) : std::runtime_error(what), kind_(kind) {}

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace freecure

#pragma once

#include <stdexcept>
#include <string>

namespace sga {

// All recoverable failures carry a short machine-parsable code plus a
// human-readable message. The CLI prints "error: <code>: <message>" on one
// line and exits non-zero.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline Error validation_error(const std::string& msg) { return Error("validation", msg); }
inline Error format_error(const std::string& msg) { return Error("format", msg); }
inline Error config_error(const std::string& msg) { return Error("config", msg); }
inline Error missing_input(const std::string& msg) { return Error("missing-input", msg); }
inline Error stale_artifact(const std::string& msg) { return Error("stale-artifact", msg); }

}  // namespace sga

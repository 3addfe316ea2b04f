#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace scatlab {

/// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorKind {
  Config,          ///< malformed input or violated precondition (exit 2)
  NumericContract, ///< a numeric post-condition did not hold (exit 3)
  Budget,          ///< a resource cap was hit (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error config_error(std::string code, const std::string& what) {
  return Error(ErrorKind::Config, std::move(code), what);
}
inline Error numeric_error(std::string code, const std::string& what) {
  return Error(ErrorKind::NumericContract, std::move(code), what);
}
inline Error budget_error(std::string code, const std::string& what) {
  return Error(ErrorKind::Budget, std::move(code), what);
}

/// Compact scientific rendering for error messages.
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::NumericContract: return 3;
    case ErrorKind::Budget: return 4;
  }
  return 1;
}

}  // namespace scatlab

#pragma once

#include <stdexcept>
#include <string>

namespace wce {

enum class ErrorKind {
  Config,     // invalid option or missing required input
  Data,       // malformed or inconsistent corpus content
  Dimension,  // shape mismatch between matrices / vectors
  Parse,      // text or binary file could not be parsed
  Io,         // file system failure
  Numeric,    // NaN/Inf encountered during computation
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace wce

#pragma once

#include <stdexcept>
#include <string>

namespace sava {

// Mirrors sava_status in the public C header; the C layer maps one to the other.
enum class ErrorCode {
  Domain = 1,
  OutOfSupport,
  Protocol,
  Invariant,
  Io,
  Parse,
  InvalidArgument,
  Unsupported,
  Usage,  // malformed run request; the CLI maps it to exit code 1
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sava

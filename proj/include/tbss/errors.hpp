#pragma once

#include <stdexcept>
#include <string>

namespace tbss {

enum class ErrorCode {
  invalid_argument = 1,
  shape_mismatch = 2,
  insufficient_sample = 3,
  singular_covariance = 4,
  size_limit = 5,
  io_error = 6,
  internal = 7,
};

/// All failures surface as this exception; code() is stable across the C boundary.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace tbss

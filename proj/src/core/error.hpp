#pragma once

#include <stdexcept>
#include <string>

namespace ghostkit {

enum class ErrorCode {
  InvalidArgument = 1,
  Shape = 2,
  Numeric = 3,
  Io = 4,
  Budget = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace ghostkit

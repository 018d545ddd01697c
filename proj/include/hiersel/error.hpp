#pragma once

#include <stdexcept>
#include <string>

namespace hsel {

enum class ErrorCode {
  invalid_argument = 1,
  dimension_mismatch,
  zero_column,
  out_of_range,
  support_too_small,
  target_too_large,
  rank_deficient,
  enumeration_too_large,
  dictionary_too_small,
  parse_error,
  missing_column,
  io_error,
};

/// Exception type thrown by every library routine. The code maps one-to-one
/// onto the status values of the C interface.
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

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace hsel

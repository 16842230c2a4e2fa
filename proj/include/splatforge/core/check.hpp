#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace splatforge::detail {

[[noreturn]] inline void fail_invalid(const std::string& msg) {
  throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw std::runtime_error(msg);
}

}  // namespace splatforge::detail

// Argument/shape validation. The message expression may use stream chaining.
#define SF_CHECK(cond, msg)                       \
  do {                                            \
    if (!(cond)) {                                \
      std::ostringstream sf_os_;                  \
      sf_os_ << msg;                              \
      ::splatforge::detail::fail_invalid(sf_os_.str()); \
    }                                             \
  } while (0)

// Runtime failures (IO, format violations).
#define SF_REQUIRE(cond, msg)                     \
  do {                                            \
    if (!(cond)) {                                \
      std::ostringstream sf_os_;                  \
      sf_os_ << msg;                              \
      ::splatforge::detail::fail_runtime(sf_os_.str()); \
    }                                             \
  } while (0)

#pragma once

#include <stdexcept>
#include <string>

namespace ckm {

// Base for every error raised by the library. Callers that only care about
// "something was wrong with the request" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised by brute-force routines when an enumeration would exceed its guard.
class OracleLimitExceeded : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace ckm

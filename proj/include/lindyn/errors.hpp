#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lindyn {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or configuration violation (CLI exit code 2).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Requested scalar mode cannot use the closed form: lambda <= 0.
class UnsupportedMode : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// c0 too small for the hyperbolic parametrization; use the numeric fallback.
class DegenerateTrajectory : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Gradient descent blew up (CLI exit code 3).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Malformed input bytes or unreadable file (CLI exit code 4).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// File does not start with the expected magic number.
class BadMagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// File ends before the data its header or record size promises.
class TruncatedInputError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Header dimensions whose product does not fit in memory bounds.
class DimensionOverflowError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lindyn

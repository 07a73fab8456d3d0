#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ood {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed configs, inconsistent dimensions, invalid
/// hyperparameters. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A fit that cannot produce a well-defined result (singular covariance,
/// degenerate subspace, non-converging MLE).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated array file. `offset()` is the byte position at
/// which the problem was detected.
class ArrayIoError : public Error {
 public:
  ArrayIoError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace ood

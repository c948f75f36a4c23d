// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_CORE_ERROR_HPP_
#define QKD_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace qkd {

// Root of every error raised by the library. Each subclass maps to one error
// category of the public contracts so callers can catch narrowly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or invalid geometry.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (tau <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input that makes a statistic meaningless, e.g. zero-variance weights.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration, model spec or checkpoint pairing.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk dataset. Carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, long long offset = -1)
      : Error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what),
        offset_(offset) {}
  long long offset() const noexcept { return offset_; }

 private:
  long long offset_;
};

// Checkpoint whose checksum or framing does not verify.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Bad command-line or report request.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qkd

#endif  // QKD_CORE_ERROR_HPP_

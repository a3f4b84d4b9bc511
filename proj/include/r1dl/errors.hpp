// Error types shared across the r1dl library.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace r1dl {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid decomposition parameters (K < 1, resolved r < 1, bad tolerance, ...).
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

// Sv (or the assembled parallel equivalent) is exactly zero.
class ZeroImageError : public Error {
 public:
  ZeroImageError() : Error("matrix-vector image is exactly zero") {}
  using Error::Error;
};

// An atom could not be fit (zero image or empty projection support).
class DegenerateAtomError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (bad token, ragged rows, structural mismatch).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Requested partition count outside [1, T].
class InvalidPartitioningError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf entry, with its location.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::size_t row, std::size_t col)
      : Error("non-finite entry at row " + std::to_string(row) + ", column " +
              std::to_string(col)),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

// Binary matrix file does not start with the expected magic bytes.
class BadMagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Binary matrix file has an unsupported format version.
class BadVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

// File could not be opened/read/written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Reference spatial pattern has an empty support (SOR denominator undefined).
class EmptyReferenceError : public Error {
 public:
  using Error::Error;
};

// A vector passed to pearson() has zero variance.
class ZeroVarianceError : public Error {
 public:
  using Error::Error;
};

// Every atom was skipped as zero-variance during matching.
class NoEligibleAtomError : public Error {
 public:
  using Error::Error;
};

}  // namespace r1dl

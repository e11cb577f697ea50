#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajsearch {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid index/generator configuration (e.g. too many subbins).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered while evaluating a distance query.
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// Two records for the same segment pair disagree; signals nondeterminism.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A single query cannot be processed even with the whole buffer to itself.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// I/O failure (missing file, short read, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Wrong magic bytes or otherwise unrecognised file layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed record in a dataset or results file. `record()` is the
/// zero-based record index (for CSV: the 1-based line number).
class ParseError : public Error {
 public:
  ParseError(std::size_t record, const std::string& what)
      : Error("record " + std::to_string(record) + ": " + what), record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

}  // namespace trajsearch

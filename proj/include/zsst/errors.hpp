#pragma once

#include <stdexcept>
#include <string>

namespace zsst {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// user/config errors exit 2, internal/runtime errors exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration supplied by the user (bad template, bad strategy,
// out-of-range hyperparameter, locked run directory, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A dataset or embedding file could not be parsed.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Unknown dataset id or missing registry entry.
class LookupError : public Error {
 public:
  using Error::Error;
};

// An operation was called with arguments that violate its preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The scoring backend (subprocess adapter) is unreachable or misbehaving.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or artifact I/O failed.
class StorageError : public Error {
 public:
  using Error::Error;
};

// The run directory is held by another live process. Separate from plain
// StorageError so the CLI can treat it as a user-level condition.
class LockError : public StorageError {
 public:
  using StorageError::StorageError;
};

// A statistic is undefined for the given input (e.g. zero-variance paired
// differences).
class DegenerateResultError : public Error {
 public:
  using Error::Error;
};

// No unigram of a class name is covered by the embedding vocabulary, so the
// masking protocol cannot be applied for that class.
class UnmaskableClassError : public Error {
 public:
  using Error::Error;
};

// Inconsistent internal state (dangling example id, shape mismatch).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace zsst

#pragma once

#include <stdexcept>
#include <string>

namespace stockmem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TaxonomyError : public Error {
 public:
  using Error::Error;
};

// Raised by resolve_type for names that are not in the taxonomy.
class UnknownTypeError : public TaxonomyError {
 public:
  using TaxonomyError::TaxonomyError;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Retryable signal from a remote provider.
class RateLimitError : public TransportError {
 public:
  using TransportError::TransportError;
};

// The response never satisfied its schema within the retry budget.
class SchemaViolation : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace stockmem

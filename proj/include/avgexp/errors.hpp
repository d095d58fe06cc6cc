#pragma once

#include <stdexcept>
#include <string>

namespace avgexp {

/// Base of every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical invariant failed to hold. Always indicates a bug upstream
/// (wrong group order, wrong structure) rather than bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class AmbiguityExhausted : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

class NotAnnihilated : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

class StructureUnverified : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

class MissingDegree : public Error {
 public:
  using Error::Error;
};

class NotMultiplicative : public Error {
 public:
  using Error::Error;
};

class InsufficientCheckpoints : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

// wrong curve or format version
class CacheMismatch : public CacheError {
 public:
  using CacheError::CacheError;
};

// truncated file or checksum failure
class CorruptCache : public CacheError {
 public:
  using CacheError::CacheError;
};

}  // namespace avgexp

#pragma once

#include <stdexcept>
#include <string>

namespace priorreg {

/// Base class for every error this library raises on purpose.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an interface contract (dimension mismatch, bad invariant).
class contract_error : public error {
 public:
  using error::error;
};

/// Inputs are syntactically valid but carry unusable values
/// (non-finite entries, wrong alphabet, empty sets).
class input_error : public error {
 public:
  using error::error;
};

/// A direction or quantity the operation depends on vanished
/// (all-zero collapsed design, all-zero weight vector).
class degenerate_error : public error {
 public:
  using error::error;
};

/// A numerical routine failed beyond recovery.
class numeric_error : public error {
 public:
  using error::error;
};

/// Malformed input file.
class data_error : public error {
 public:
  using error::error;
};

/// Invalid run configuration.
class config_error : public error {
 public:
  using error::error;
};

}  // namespace priorreg

#pragma once

#include <stdexcept>
#include <string>

namespace pmax {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file/column problems: missing columns, duplicate names, bad header.
struct SchemaError : Error {
  using Error::Error;
};

// Malformed numeric cell; message carries 1-based row and column.
struct ParseError : Error {
  using Error::Error;
};

// Dataset shape or content violates a precondition (n too small, non-finite
// values, zero columns, bad spec fields).
struct ValidationError : Error {
  using Error::Error;
};

// Nuisance Gram matrix not positive definite even after one jitter retry.
struct CollinearityError : Error {
  using Error::Error;
};

// A parsimonious model (or the full design) is numerically rank deficient
// and the caller asked for an operation that cannot tolerate that.
struct DegeneracyError : Error {
  using Error::Error;
};

// Random design construction failed (rank repair exhausted).
struct GenerationError : Error {
  using Error::Error;
};

// Simulation design / CLI configuration problems.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pmax

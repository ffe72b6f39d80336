#pragma once

#include <stdexcept>
#include <string>

namespace projlab {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, non-finite data, out-of-range parameters.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// The request would enumerate more than the configured limit.
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Random sampling or profiling produced no usable data.
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// A verification routine needs iterates that were not retained.
class MissingData : public Error {
public:
  using Error::Error;
};

/// Incompatible inputs, e.g. constants built for a different eta or N.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// The angle oracle is undefined for identical subspaces.
class UndefinedOracle : public Error {
public:
  using Error::Error;
};

} // namespace projlab

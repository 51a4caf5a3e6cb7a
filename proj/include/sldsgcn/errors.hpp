#pragma once

#include <stdexcept>
#include <string>

namespace sldsgcn {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A dataset file is missing or unreadable.
struct LoadError : Error {
  using Error::Error;
};

/// A dataset file is present but its contents violate the format contract.
struct ValidationError : Error {
  using Error::Error;
};

/// Tensor shapes passed to an operation are incompatible.
struct DimensionError : Error {
  using Error::Error;
};

/// A call violates an operation precondition (e.g. no labeled nodes).
struct ContractError : Error {
  using Error::Error;
};

/// A run configuration contains invalid or unknown settings.
struct ConfigError : Error {
  using Error::Error;
};

/// Training produced a non-finite loss or otherwise failed.
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace sldsgcn

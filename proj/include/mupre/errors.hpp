#pragma once

#include <stdexcept>
#include <string>

namespace mupre {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct AsymmetryError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct SingularityError : Error { using Error::Error; };
// Quantity has no defined value for this input (e.g. stable rank of 0).
struct UndefinedError : Error { using Error::Error; };
struct DivisionError : Error { using Error::Error; };
// Accumulated preconditioner left the PSD cone beyond roundoff.
struct StateCorruptionError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace mupre

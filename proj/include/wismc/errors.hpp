#pragma once

#include <stdexcept>
#include <string>

namespace wismc {

// Base of all library errors. The CLI maps subclasses onto exit codes:
// data/validation problems -> 1, I/O and config problems -> 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySeries : Error { using Error::Error; };
struct UnsortedInput : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct DegenerateDistribution : Error { using Error::Error; };
struct DegenerateIndex : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct UnreachableBackwardState : Error { using Error::Error; };
struct SymbolMismatch : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace wismc

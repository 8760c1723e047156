#pragma once

#include <stdexcept>
#include <string>

namespace ssvep {

// Base class for every error raised by the toolkit. CLI exit codes are
// derived from the concrete type (see tools/).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value; message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

// Invalid operation parameter (cutoffs, passbands, counts).
struct ParamError : Error {
  using Error::Error;
};

// Signal or window too short / too long for the requested operation.
struct LengthError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

// Zero-variance rows and similar inputs the math cannot handle.
struct DegenerateInputError : Error {
  using Error::Error;
};

// A class has too few trials to stratify.
struct StratificationError : Error {
  using Error::Error;
};

// NaN/Inf encountered in numeric computation.
struct NumericError : Error {
  using Error::Error;
};

// Training divergence; message reports the epoch.
struct TrainingError : Error {
  using Error::Error;
};

// File I/O, bad magic, truncated payloads.
struct DataError : Error {
  using Error::Error;
};

// Problem too large for the requested algorithm.
struct SizeError : Error {
  using Error::Error;
};

// Singular or ill-posed estimation system.
struct EstimationError : Error {
  using Error::Error;
};

}  // namespace ssvep

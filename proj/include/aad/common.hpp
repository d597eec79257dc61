#pragma once

#include <stdexcept>
#include <string>

namespace aad {

// Error hierarchy. Everything thrown by this library derives from aad::Error,
// so callers can catch one type at the boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument values (band edges, grid shapes, config fields).
struct ParameterError : Error {
    using Error::Error;
};

// Sample-rate conversion requested with a ratio outside the supported
// rational set.
struct UnsupportedRateError : Error {
    using Error::Error;
};

// Not enough samples for the requested operation (e.g. more lags than data).
struct InsufficientDataError : Error {
    using Error::Error;
};

// Mismatched matrix/vector dimensions between arguments.
struct DimensionError : Error {
    using Error::Error;
};

// A linear system that cannot be solved (rank-deficient normal equations at
// zero regularization).
struct SingularityError : Error {
    using Error::Error;
};

// Covariance condition number too large for a stable decomposition.
struct ConditioningError : Error {
    using Error::Error;
};

// Dataset / file format problems.
struct DataError : Error {
    using Error::Error;
};

}  // namespace aad

#pragma once

#include <stdexcept>
#include <string>

namespace regimenet {

// Error categories map onto the CLI exit codes:
//   UsageError -> 1, NumericalError -> 2, DataFormatError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
struct DataFormatError : Error {
    using Error::Error;
};

// Bad cell/face coordinates.
struct IndexError : UsageError {
    using UsageError::UsageError;
};
// Field or matrix dimensions disagree.
struct ShapeError : UsageError {
    using UsageError::UsageError;
};
// Scalar argument outside its mathematical domain.
struct DomainError : UsageError {
    using UsageError::UsageError;
};
// Operation called on an object in the wrong state (e.g. empty table).
struct StateError : UsageError {
    using UsageError::UsageError;
};
// Invalid scenario or run configuration.
struct ConfigError : UsageError {
    using UsageError::UsageError;
};
// Boundary specification does not cover the boundary or is incompatible.
struct BoundarySpecError : UsageError {
    using UsageError::UsageError;
};
// Dataset split cannot be formed.
struct SplitError : UsageError {
    using UsageError::UsageError;
};
// Feature sampling could not reach the required distinct counts.
struct SamplingError : UsageError {
    using UsageError::UsageError;
};

// Fixed-point iteration diverged.
struct DivergenceError : NumericalError {
    using NumericalError::NumericalError;
};
// Linear solver failed to reach its residual target.
struct LinearSolverError : NumericalError {
    using NumericalError::NumericalError;
};
// System assembly failed (e.g. nonpositive mobility).
struct AssemblyError : NumericalError {
    using NumericalError::NumericalError;
};
// Dataset generation produced no usable examples.
struct GenerationError : NumericalError {
    using NumericalError::NumericalError;
};

// Malformed file contents.
struct FormatError : DataFormatError {
    using DataFormatError::DataFormatError;
};
// Well-formed file with invalid values.
struct DataError : DataFormatError {
    using DataFormatError::DataFormatError;
};

} // namespace regimenet

#pragma once

#include <stdexcept>
#include <string>

namespace wire {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Chart point outside the model's coordinate domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Fields on mismatched grids or with mismatched dimension.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Called with inputs that violate an operation's preconditions.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Time step larger than the grid spacing.
class CflError : public Error {
public:
    using Error::Error;
};

/// Bentness fell below the configured threshold; the theta operator is close to singular.
class NearGeodesicError : public Error {
public:
    NearGeodesicError(const std::string& msg, double b) : Error(msg), bentness(b) {}
    double bentness;
};

/// Fixed-point iteration stopped contracting.
class WindowTooLargeError : public Error {
public:
    using Error::Error;
};

/// Curve with a vanishing discrete tangent.
class DegenerateCurveError : public Error {
public:
    using Error::Error;
};

/// Linear solver breakdown or non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Trajectory left the chart domain during a run.
class ChartExitError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace wire

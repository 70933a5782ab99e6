#pragma once

#include <stdexcept>
#include <string>

namespace orthospec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad parameter values, malformed configs, degenerate counts.
struct InvalidArgument : Error {
    using Error::Error;
};

// Argument outside the mathematical domain of an operation (tau < 1, grid point
// at or below max T, ...).
struct DomainError : Error {
    using Error::Error;
};

// Theory operations require a bounded trimming function.
struct UnboundedTrimmer : Error {
    using Error::Error;
};

// Non-finite integrand values at interior quadrature nodes.
struct IntegrandError : Error {
    using Error::Error;
};

// Iterative solver failed to converge.
struct SolverError : Error {
    using Error::Error;
};

// Bracket expansion for the Lambda minimum exceeded its cap.
struct NoMinimum : Error {
    using Error::Error;
};

// No sign change of the phase-transition criterion over the requested range.
struct NoTransition : Error {
    using Error::Error;
};

// Inconsistent matrix/vector dimensions.
struct DimensionError : Error {
    using Error::Error;
};

}  // namespace orthospec

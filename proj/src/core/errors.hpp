#pragma once

#include <stdexcept>
#include <string>

namespace drcut {

// Error taxonomy shared by the library and the C API. Every failure mode in
// the core maps onto one of these; the C API translates them into status
// codes, the CLI into exit codes.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller passed something outside a precondition (bad n, bad bandwidth, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

// Malformed config/CSV/JSON input.
struct ParseError : Error {
    using Error::Error;
};

// Numerical failure: non-finite hazard, violated dominating bound, empty
// kernel window, degenerate denominator.
struct NumericError : Error {
    using Error::Error;
};

// Iterative fit did not converge within its iteration cap.
struct ConvergenceError : Error {
    using Error::Error;
};

// File system failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace drcut

#pragma once

#include <stdexcept>
#include <string>

namespace liouville {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; line is 1-based.
struct ParseError : Error {
    int line;
    ParseError(int line_, const std::string& msg)
        : Error("parse error at line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// A domain invariant does not hold (non-manifold mesh, cone on boundary, ...).
struct ValidationError : Error {
    using Error::Error;
};

// An operation was called outside its contract.
struct PreconditionError : Error {
    using Error::Error;
};

// A linear or nonlinear solve failed to reach its tolerance.
struct SolverError : Error {
    using Error::Error;
};

}  // namespace liouville

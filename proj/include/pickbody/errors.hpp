#pragma once

#include <stdexcept>
#include <string>

namespace pickbody {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (non-finite entries, size mismatch,
/// coincident nodes, indices out of range).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates an operation's mathematical precondition.
class PreconditionViolation : public Error {
public:
    using Error::Error;
};

class DegenerateBoundaryPair : public Error {
public:
    using Error::Error;
};

class ReconstructionFailure : public Error {
public:
    using Error::Error;
};

class NoBoundaryScale : public Error {
public:
    using Error::Error;
};

} // namespace pickbody

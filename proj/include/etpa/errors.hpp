#pragma once

#include <stdexcept>
#include <string>

namespace etpa {

// Bad user input or a violated type invariant. Raised before any computation.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A normalized trace was requested but every sample is zero.
class DegenerateTraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature step too coarse for the fastest oscillation in the integrand.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedFileError : public FormatError {
public:
    using FormatError::FormatError;
};

class FeatureCountError : public FormatError {
public:
    using FormatError::FormatError;
};

class LabelError : public FormatError {
public:
    using FormatError::FormatError;
};

} // namespace etpa

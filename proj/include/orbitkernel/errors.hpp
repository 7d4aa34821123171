#pragma once

#include <stdexcept>
#include <string>

namespace orbitkernel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies inside the excluded neighbourhood of the symmetry axis Q = 0.
class DegeneratePoint : public Error {
public:
    using Error::Error;
};

/// Invalid numeric parameters or configuration documents.
class ConfigError : public Error {
public:
    using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
    using Error::Error;
};

/// Fewer Monte-Carlo endpoints landed in the target box than the estimator needs.
class InsufficientSamples : public Error {
public:
    using Error::Error;
};

/// The explicit grid step violates the positivity (stability) bound.
class StabilityViolation : public Error {
public:
    using Error::Error;
};

} // namespace orbitkernel

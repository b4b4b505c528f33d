#pragma once

#include <stdexcept>
#include <string>

namespace spreadrisk {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file or stream (syntax / schema).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that breaks a network invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A rate handed to an operation lies outside its declared [lower, upper] range.
class BoundsError : public Error {
public:
    using Error::Error;
};

// The requested discount rate (or optimization problem) has no feasible point.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what, double abscissa = 0.0)
        : Error(what), spectral_abscissa(abscissa) {}
    double spectral_abscissa;
};

// A solver or integrator failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Bad command-line usage.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace spreadrisk

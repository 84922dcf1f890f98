#pragma once

#include <stdexcept>
#include <string>

namespace carbkin {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument is outside the domain of the operation (negative ionic
/// strength, non-positive temperature, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A result would leave the representable range (e.g. Omega^p overflow).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Newton iteration of a speciation solve did not converge.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (final charge residual " + std::to_string(residual) + " mol/kg)")
        , residual_(residual)
    {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed input file. The message carries the file and the offending
/// field path, line or row.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace carbkin

#pragma once

#include <stdexcept>
#include <string>

namespace tcdl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (market files, payoffs, configs).
class InputError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function (e.g. U'(x) for x <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A solver could not certify its answer. Never reported as "optimal".
class SolverIndeterminate : public Error {
public:
    using Error::Error;
};

/// The market admits no consistent price system, so duality-based operations refuse to run.
class NoConsistentPriceSystem : public Error {
public:
    using Error::Error;
};

/// Initial capital at or below the threshold x0, where u(x) = -infinity.
class BelowX0 : public Error {
public:
    BelowX0(double x, double x0)
        : Error("below-x0: x = " + std::to_string(x) + " does not exceed x0 = " + std::to_string(x0)),
          x_(x), x0_(x0) {}

    double x() const noexcept { return x_; }
    double x0() const noexcept { return x0_; }

private:
    double x_;
    double x0_;
};

}  // namespace tcdl

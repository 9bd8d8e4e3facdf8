#pragma once

#include <stdexcept>
#include <string>

namespace msvol {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: domain violations, schema/parse failures, no-arbitrage bound
// violations, rank-deficient designs, empty calibration sets.
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical failures: non-convergence, tolerance not reached, step-size policy
// violations.
class NumericError : public Error {
public:
    using Error::Error;
};

// Monte Carlo budget insufficient to decide the question asked.
class InconclusiveError : public Error {
public:
    using Error::Error;
};

} // namespace msvol

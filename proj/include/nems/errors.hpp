// errors.hpp - exception types shared by the solver, diagnostics and sweep front-end

#pragma once

#include <stdexcept>
#include <string>

namespace nems {

// Bad physical or numerical input (non-finite coupling, non-positive temperature, ...).
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A documented validity guard failed, e.g. beta*delta >= pi for the Lamb shift.
struct GuardViolation : std::domain_error {
    using std::domain_error::domain_error;
};

// Iterative or series evaluation did not reach the requested tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonUniqueSteadyState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested generator does not fit the configured memory budget.
struct DimensionError : std::length_error {
    using std::length_error::length_error;
};

struct FrameMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateRates : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepSizeUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration problem; the message always starts with the offending field path.
struct ConfigError : std::invalid_argument {
    ConfigError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what), field(path) {}
    std::string field;
};

} // namespace nems

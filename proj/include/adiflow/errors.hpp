#pragma once

#include <stdexcept>
#include <string>

namespace adiflow {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad inputs: precondition or invariant violations. CLI maps these to exit code 2.
class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

/// Requested value sits on (or too close to) a pole of the secular function.
class pole_error : public validation_error {
public:
    explicit pole_error(const std::string& msg) : validation_error(msg) {}
};

/// Degenerate denominator (e.g. zero secular sum, zero dominant component).
class singular_error : public validation_error {
public:
    explicit singular_error(const std::string& msg) : validation_error(msg) {}
};

/// Coupling lands inside a guard band around a critical value; the outcome is
/// epsilon-sensitive there and no prediction is made.
class ambiguous_region_error : public validation_error {
public:
    explicit ambiguous_region_error(const std::string& msg) : validation_error(msg) {}
};

/// Closed-form prediction requested for a step that is not an edge case.
class unsupported_prediction_error : public validation_error {
public:
    explicit unsupported_prediction_error(const std::string& msg) : validation_error(msg) {}
};

/// Computation failed: non-convergence, divergence, broken internal cross-check.
/// CLI maps these to exit code 3.
class numerical_error : public error {
public:
    explicit numerical_error(const std::string& msg) : error(msg) {}
};

class divergence_error : public numerical_error {
public:
    explicit divergence_error(const std::string& msg) : numerical_error(msg) {}
};

} // namespace adiflow

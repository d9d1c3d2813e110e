#pragma once

#include <stdexcept>
#include <string>

namespace romerr {

// Invalid inputs: bad discretizations, malformed configs, violated
// preconditions. Maps to CLI exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched vector/matrix dimensions.
class shape_error : public validation_error {
public:
    explicit shape_error(const std::string& msg) : validation_error(msg) {}
};

// Newton divergence and other time-stepping failures. Exit code 3.
class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& msg, double residual_norm)
        : std::runtime_error(msg), residual_norm(residual_norm) {}
    double residual_norm;
};

// All restarts of a model fit diverged. Exit code 4.
class training_error : public std::runtime_error {
public:
    explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Artifact/data mismatches (e.g. model vs. dataset feature kind). Exit code 5.
class compatibility_error : public std::runtime_error {
public:
    explicit compatibility_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rank deficiency, degenerate spectra/variances, ill conditioning.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace romerr

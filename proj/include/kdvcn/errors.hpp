#pragma once

#include <stdexcept>
#include <string>

namespace kdvcn {

/// Two grid functions (or a grid function and a weight) live on different grids.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A run/experiment was configured with inconsistent or unusable parameters.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// The linear solve did not meet its residual contract.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual)
        : std::runtime_error(what), achieved_residual(residual) {}
    double achieved_residual;
};

/// The fixed-point iteration ran out of sweeps before reaching tolerance.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double increment, int iterations)
        : std::runtime_error(what), last_increment_norm(increment), iterations(iterations) {}
    double last_increment_norm;
    int iterations;
};

} // namespace kdvcn

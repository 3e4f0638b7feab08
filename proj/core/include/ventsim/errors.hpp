#pragma once

#include <stdexcept>
#include <string>

namespace ventsim {

/// Configuration / input problems: bad files, bad keys, violated preconditions
/// detectable before any numerics run. CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failures inside the solvers (non-convergence, instability, non-finite
/// values). CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ventsim

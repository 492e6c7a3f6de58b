#pragma once

#include <stdexcept>
#include <string>

namespace spinlab {

// Bad inputs: dimension mismatches, out-of-domain arguments, malformed
// configs. Mapped to exit code 2 by the CLI.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of the numerics at runtime: diverged chains, unresolved
// eigensolves, tolerance misses. Mapped to exit code 3 by the CLI.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spinlab

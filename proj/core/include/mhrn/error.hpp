#pragma once
#include <stdexcept>
#include <string>

namespace mhrn {

// base for all library errors
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// bad user-facing configuration (CLI maps this to exit code 2)
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// runtime numerical fault: NaN/Inf, non-convergent root find (exit code 3)
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace mhrn

#pragma once

#include <stdexcept>
#include <string>

namespace msrom {

/// Invalid user input: bad mesh dimensions, malformed files, unknown keys.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// A numerical step failed: factorization breakdown, non-convergence, rank loss.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

} // namespace msrom

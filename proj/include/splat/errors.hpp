#pragma once

#include <stdexcept>
#include <string>

namespace splat {

// Invalid configuration (bad file, unknown key, violated constraint). CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered during optimization. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splat

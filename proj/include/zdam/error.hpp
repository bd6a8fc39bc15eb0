#pragma once

#include <stdexcept>
#include <string>

namespace zdam {

/// Invalid user-supplied parameters (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A cost evaluation produced a non-finite value (maps to CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zdam

#pragma once

#include <stdexcept>
#include <string>

namespace rsmc {

// Invalid parameter combinations, violated model assumptions, bad config files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A problem definition that an operation cannot handle (e.g. nonlinearity
// passed to a linear-only oracle).
class UnsupportedProblemError : public std::runtime_error {
public:
    explicit UnsupportedProblemError(const std::string& what) : std::runtime_error(what) {}
};

// A run whose samples were all discarded as poisoned.
class RunError : public std::runtime_error {
public:
    explicit RunError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rsmc

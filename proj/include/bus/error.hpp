#pragma once

#include <stdexcept>
#include <string>

namespace bus {

// Error taxonomy mirrors the CLI exit codes:
//   ConfigError -> 1, IoError -> 2, ValidationError -> 3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bus

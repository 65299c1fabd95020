#pragma once

#include <stdexcept>
#include <string>

namespace tonelab {

// Exit-code taxonomy: ParseError -> 1, ConfigError -> 2, DataError -> 3.
// Anything else escaping to main is a bug and reported as such.

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tonelab

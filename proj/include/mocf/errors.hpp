#pragma once

#include <stdexcept>
#include <string>

namespace mocf {

// Exit-code categories used by the CLI: user/config errors map to 1,
// data errors to 2, internal/numeric errors to 3.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mocf

#pragma once

#include <stdexcept>
#include <string>

namespace inverspect {

/// Failure category; the CLI maps these onto exit codes (config -> 2, numeric -> 3).
enum class ErrorKind { config, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Invalid arguments, malformed files, violated preconditions.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Non-finite iterates, SVD failure, power-iteration non-convergence.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ConfigError(message);
}

} // namespace detail
} // namespace inverspect

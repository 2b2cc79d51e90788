#pragma once

#include <stdexcept>
#include <string>

namespace weclust {

enum class ErrorKind { config, data, numeric };

/// Base exception for every failure raised by the library. The kind maps to
/// the CLI exit code (config → 2, data → 3, numeric → 4).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numeric: return 4;
    }
    return 1;
}

}  // namespace weclust

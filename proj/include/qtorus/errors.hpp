#pragma once

#include <stdexcept>
#include <string>

namespace qtorus {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

// Data range does not cover the request (never truncated silently).
class InsufficientData : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "insufficient_data"; }
};

class ResourceExhausted : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "resource_exhausted"; }
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& source, int line, int column, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          source_(source), line_(line), column_(column) {}
    const char* kind() const noexcept override { return "config_error"; }
    const std::string& source() const noexcept { return source_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    std::string source_;
    int line_;
    int column_;
};

}  // namespace qtorus

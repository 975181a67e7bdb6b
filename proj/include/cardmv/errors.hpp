#pragma once

#include <stdexcept>
#include <string>

namespace cardmv {

/// Raised when a text input (price file, statistics file, instance file)
/// cannot be parsed. Carries the 1-based line and column of the offending
/// token when known (0 when not applicable).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string what, int line = 0, int column = 0)
        : std::runtime_error(std::move(what)), line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Raised when an Instance fails structural validation and the caller
/// required a usable instance (e.g. build_instance).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cardmv

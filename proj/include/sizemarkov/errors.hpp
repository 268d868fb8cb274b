#pragma once

// Error taxonomy shared by the library and the CLI. Categories map to
// stable process exit codes (see tools/).

#include <stdexcept>
#include <string>

namespace sizemarkov {

enum class ErrorCategory {
    input,       // unreadable/missing/unparseable sources
    validation,  // well-formed data violating a domain invariant
    numeric,     // operation undefined for the given values
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& message) : Error(ErrorCategory::input, message) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error(ErrorCategory::validation, message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error(ErrorCategory::numeric, message) {}
};

}  // namespace sizemarkov

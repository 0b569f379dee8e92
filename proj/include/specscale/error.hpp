#pragma once

#include <stdexcept>
#include <string>

namespace specscale {

/// Base of every error thrown by the library. User-facing errors (bad input
/// files, invalid parameters) derive from UserError; InvariantViolation marks
/// an internal bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UserError : public Error {
public:
    using Error::Error;
};

class ParseError : public UserError {
public:
    using UserError::UserError;
};

/// A value parsed fine but violates a documented constraint. The message
/// names the offending field.
class ValidationError : public UserError {
public:
    ValidationError(std::string field, const std::string& what)
        : UserError(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DomainError : public UserError {
public:
    using UserError::UserError;
};

/// Fitting input that cannot identify the law's parameters.
class DegenerateData : public UserError {
public:
    using UserError::UserError;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace specscale

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracdyn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

/// A numerical method failed to reach its accuracy target. Indicates an
/// internal bug rather than bad user input.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Operation called with arguments that violate its documented contract.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A field evaluation produced inf or NaN.
class NonFiniteError : public Error {
public:
    NonFiniteError(std::size_t component, const std::string& what)
        : Error(what), component_(component) {}
    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

}  // namespace fracdyn

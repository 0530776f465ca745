#pragma once

#include <stdexcept>
#include <string>

namespace epf {

/// Base for all toolkit errors; the CLI maps these to exit status 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on a numeric argument violated (negative price, S < 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

/// Non-finite value encountered during a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace epf

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Requested rank does not fit the data (e.g. V > min(N, K)).
class InvalidRank : public Error {
public:
    using Error::Error;
};

/// Operation called with a ComponentMatrix fitted by an incompatible method.
class InvalidMethod : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed decomposition inside a numerical routine.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// CSV / JSON parse failure. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace mlow

#pragma once

#include <stdexcept>
#include <string>

namespace iafc {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied parameters was violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Comb spacing does not exceed tooth width.
class FinesseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Grid cannot be built, or a field does not live on a compatible grid.
class GridError : public Error {
public:
    using Error::Error;
};

/// Fit input is degenerate, or a fit result is used outside its validity.
class FitError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ValidationError(what);
}

} // namespace detail
} // namespace iafc

#pragma once

#include <stdexcept>
#include <string>

namespace pdasc {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or parameter combination (k = 0, np >= gl, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Operands of different arity.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Value outside the domain of a distance, or data incompatible with a distance kind.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed, truncated or inconsistent file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// The file system refused an operation.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pdasc

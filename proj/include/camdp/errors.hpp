#pragma once

#include <stdexcept>
#include <string>

namespace camdp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid caller input: shapes, ranges, probabilities.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A linear solve or iteration failed beyond tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Problem too large for exhaustive methods (policy enumeration).
class ScopeError : public Error {
public:
    using Error::Error;
};

/// Malformed files or serialized data.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace camdp

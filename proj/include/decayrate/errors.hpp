#pragma once

#include <stdexcept>
#include <string>

namespace decayrate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter error: " + what) {}
};

/// The input carries no usable information (rank-deficient fit, silent signal).
class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& what) : Error("degenerate input: " + what) {}
};

/// A requested level or region is not reachable in the data.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error("range error: " + what) {}
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("i/o error: " + what) {}
};

}  // namespace decayrate

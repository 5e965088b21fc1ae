#pragma once

#include <stdexcept>
#include <string>

namespace vitalcast {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shape or dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV, config, model file).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (bad parameter value, malformed channel list, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// API misuse (missing gradient, attention not enabled, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training failed (empty split, divergence).
class TrainError : public Error {
public:
    using Error::Error;
};

/// Filesystem or I/O failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace vitalcast

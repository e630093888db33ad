#pragma once

#include <stdexcept>
#include <string>

namespace s2s {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed image content (non-finite values, nonpositive after shift).
class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DatasetError : public IoError {
public:
    using IoError::IoError;
};

/// Non-finite loss or gradients during training.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace s2s

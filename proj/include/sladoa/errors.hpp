#pragma once

#include <stdexcept>
#include <string>

namespace sladoa {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Vector/matrix dimension disagreement, incompatible checkpoint shapes, etc.
class shape_error : public error {
public:
    using error::error;
};

/// Invalid configuration value or malformed config file.
class config_error : public error {
public:
    using error::error;
};

/// File read/write failure, truncated payload, format-version mismatch.
class io_error : public error {
public:
    using error::error;
};

/// Non-finite loss, singular system, degenerate input.
class numeric_error : public error {
public:
    using error::error;
};

} // namespace sladoa

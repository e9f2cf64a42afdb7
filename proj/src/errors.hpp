#pragma once

#include <stdexcept>
#include <string>

namespace dna {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/image shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value or argument (non-positive sizes, even kernels,
// spatial dims not divisible by 2^depth, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// API misuse: backward on a non-scalar, second backward on the same tape.
class ContractError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered in values or gradients. Message names the op or
// parameter and, inside the training loop, the iteration index.
class NumericError : public Error {
public:
    using Error::Error;
};

// Unsupported or corrupt file format.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure (open, read, write, rename).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dna

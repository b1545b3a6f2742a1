#pragma once

#include <stdexcept>
#include <string>

namespace mgeneo {

// Root of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed container: bad magic, bad header, unparsable text.
class FormatError : public Error {
public:
    using Error::Error;
};

// Stream ended before the declared payload.
class LengthError : public Error {
public:
    using Error::Error;
};

// A decoded value is outside its legal range (e.g. an MNIST label > 9).
class ValueError : public Error {
public:
    using Error::Error;
};

// Two objects that must share a shape do not.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A sampled kernel has zero L1 mass and cannot be normalized.
class DegenerateKernelError : public Error {
public:
    using Error::Error;
};

// Bad operator-bank or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A filtration violates value(face) <= value(coface).
class NonMonotoneError : public Error {
public:
    using Error::Error;
};

// A cached artifact failed its integrity check.
class CacheError : public Error {
public:
    using Error::Error;
};

}  // namespace mgeneo

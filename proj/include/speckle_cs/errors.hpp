#pragma once

#include <stdexcept>
#include <string>

namespace speckle_cs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed file header or magic.
class FormatError : public Error {
public:
    using Error::Error;
};

// File does not start with the expected magic bytes.
class MagicError : public FormatError {
public:
    using FormatError::FormatError;
};

// Payload shorter (or longer) than its header declares.
class LengthError : public FormatError {
public:
    using FormatError::FormatError;
};

// Declared layer/tensor shapes do not chain.
class ShapeError : public FormatError {
public:
    using FormatError::FormatError;
};

// Two inputs that should agree (e.g. image and label files) do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class SelectionError : public Error {
public:
    using Error::Error;
};

// Non-finite value encountered in a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

class ReconstructionError : public Error {
public:
    using Error::Error;
};

}  // namespace speckle_cs

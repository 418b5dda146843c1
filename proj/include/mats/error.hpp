#pragma once

#include <stdexcept>
#include <string>

namespace mats {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller handed in data that violates a documented contract (bad shape,
/// non-contrast hypothesis, unparsable file, ...). The CLI maps this to exit 2.
class InputError : public Error {
public:
    using Error::Error;
};

class SymmetryError : public InputError {
public:
    using InputError::InputError;
};

class DimensionError : public InputError {
public:
    using InputError::InputError;
};

class ContractError : public InputError {
public:
    using InputError::InputError;
};

class NotPsdError : public InputError {
public:
    using InputError::InputError;
};

/// A component has zero empirical variance, so the diagonal standardisation
/// is undefined.
class DegenerateVarianceError : public InputError {
public:
    using InputError::InputError;
};

}  // namespace mats

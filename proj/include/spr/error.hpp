#pragma once

#include <stdexcept>
#include <string>

namespace spr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates the expected file or record layout.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A treatment arm has no observations.
class EmptyArm : public SchemaError {
public:
    using SchemaError::SchemaError;
};

/// Invalid or missing configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failures of the numerical core (factorization, degenerate samples, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

class MissingOutcomes : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateSample : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateResample : public NumericError {
public:
    using NumericError::NumericError;
};

class CovarianceFactorizationFailure : public NumericError {
public:
    using NumericError::NumericError;
};

class DimensionMismatch : public NumericError {
public:
    using NumericError::NumericError;
};

class EmptyGroup : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace spr

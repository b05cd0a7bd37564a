#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fibernet {

/// Base class for every error raised by the toolkit. The CLI maps the two
/// branches below onto exit codes (configuration vs numerical failure).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Problems with user-supplied configuration or files.
class ConfigError : public Error {
public:
    using Error::Error;
};

class SchemaError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

class InvalidGroup : public Error {
public:
    using Error::Error;
};

/// Everything that goes wrong while integrating or solving.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegeneracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, std::int64_t step)
        : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, double residual)
        : NumericalError(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class UndefinedCapacity : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TaskDivergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace fibernet

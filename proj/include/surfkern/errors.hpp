#pragma once

#include <stdexcept>
#include <string>

namespace surfkern {

// All library errors derive from Error so callers can map them onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyEnsembleError : public Error {
public:
    using Error::Error;
};

class EvaluationSingularity : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoRootError : public NumericalError {
public:
    NoRootError(const std::string& what, double period = 0.0)
        : NumericalError(what), period_(period) {}
    double period() const noexcept { return period_; }

private:
    double period_;
};

class KernelEvaluationError : public NumericalError {
public:
    KernelEvaluationError(const std::string& what, int period_index = -1)
        : NumericalError(what), period_index_(period_index) {}
    int period_index() const noexcept { return period_index_; }

private:
    int period_index_;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class CheckpointFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace surfkern

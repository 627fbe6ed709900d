#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace tetrakit {

/// Named residuals attached to reports and to some errors.
using ResidualMap = std::map<std::string, double>;

/// Base class of every error thrown by tetrakit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NotPsdError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class NotContractionError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class NotCommutingError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Evaluation at (or numerically at) a pole of a rational function.
class PoleError : public Error {
public:
    using Error::Error;
};

/// A linear system turned out to be inconsistent; carries the best residual.
class NoSolutionError : public Error {
public:
    NoSolutionError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The input violates a structural identity that holds for every valid input
/// of the operation (e.g. the residual isometry of a tetrablock contraction).
class InconsistentInputError : public Error {
public:
    using Error::Error;
};

/// Evidence that a triple is not a tetrablock contraction, produced while
/// computing fundamental operators. Distinct from a plain solver failure.
class NotEContractionEvidence : public Error {
public:
    NotEContractionEvidence(const std::string& what, ResidualMap residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const ResidualMap& residuals() const noexcept { return residuals_; }

private:
    ResidualMap residuals_;
};

/// A guarantee that should follow from a verified premise failed. Indicates a
/// numerical breakdown or a bug, never a property of the input.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed or schema-violating input document.
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace tetrakit

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ges {

enum class ErrorKind {
    InvalidDevice,
    NonFiniteResult,
    LengthMismatch,
    InvalidSpec,
    EmptySample,
    InvalidGamma,
    OrderingViolation,
    InfeasibleBounds,
    NonTighteningCoefficient,
    NumericalFailure,
    MaxIterationsExceeded,
    EmptyFleet,
    DimensionMismatch,
    InvalidProbability,
    MissingOnProb,
    ParseError,
    ValidationError,
    InvalidConfig,
    Infeasible,
    Unbounded,
    IoError,
};

const char* to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind plus a list of detail lines.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::vector<std::string> details = {})
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind), details_(std::move(details)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    ErrorKind kind_;
    std::vector<std::string> details_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidDevice: return "InvalidDevice";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::InvalidGamma: return "InvalidGamma";
    case ErrorKind::OrderingViolation: return "OrderingViolation";
    case ErrorKind::InfeasibleBounds: return "InfeasibleBounds";
    case ErrorKind::NonTighteningCoefficient: return "NonTighteningCoefficient";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorKind::EmptyFleet: return "EmptyFleet";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::MissingOnProb: return "MissingOnProb";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace ges

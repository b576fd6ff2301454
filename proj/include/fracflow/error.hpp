#pragma once

#include <stdexcept>
#include <string>

namespace fracflow {

enum class ErrorKind {
    InvalidInstance,
    InstanceMismatch,
    NotInX0,
    SamplerFailure,
    StepReject,
    StepCollapse,
    UnsupportedRegime,
    HypothesisNotMet,
    NumericalFailure,
    ConfigError,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInstance: return "invalid-instance";
    case ErrorKind::InstanceMismatch: return "instance-mismatch";
    case ErrorKind::NotInX0: return "not-in-X0";
    case ErrorKind::SamplerFailure: return "sampler-failure";
    case ErrorKind::StepReject: return "step-reject";
    case ErrorKind::StepCollapse: return "step-collapse";
    case ErrorKind::UnsupportedRegime: return "unsupported-regime";
    case ErrorKind::HypothesisNotMet: return "hypothesis-not-met";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::ConfigError: return "config-error";
    }
    return "unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace fracflow

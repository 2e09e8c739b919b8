#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pks {

enum class ErrorCode {
    InvalidField,
    InvalidParameter,
    InvalidData,
    DomainTooSmall,
    OutOfValidatedRange,
    OutOfRange,
    StepRejected,
    BlowupDetected,
    StiffnessFailure,
    SupercriticalMass,
    FixedPointStalled,
    QuadratureDiverging,
    DependencyMissing,
    UseProfileModule,
    InsufficientSampling,
    DivergentMoment,
    BlowupTrajectory,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidField: return "InvalidField";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::InvalidData: return "InvalidData";
        case ErrorCode::DomainTooSmall: return "DomainTooSmall";
        case ErrorCode::OutOfValidatedRange: return "OutOfValidatedRange";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::StepRejected: return "StepRejected";
        case ErrorCode::BlowupDetected: return "BlowupDetected";
        case ErrorCode::StiffnessFailure: return "StiffnessFailure";
        case ErrorCode::SupercriticalMass: return "SupercriticalMass";
        case ErrorCode::FixedPointStalled: return "FixedPointStalled";
        case ErrorCode::QuadratureDiverging: return "QuadratureDiverging";
        case ErrorCode::DependencyMissing: return "DependencyMissing";
        case ErrorCode::UseProfileModule: return "UseProfileModule";
        case ErrorCode::InsufficientSampling: return "InsufficientSampling";
        case ErrorCode::DivergentMoment: return "DivergentMoment";
        case ErrorCode::BlowupTrajectory: return "BlowupTrajectory";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace pks

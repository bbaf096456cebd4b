#include "triphase/errors.hpp"

namespace triphase {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotInRange: return "NotInRange";
        case ErrorCode::KclViolation: return "KclViolation";
        case ErrorCode::KvlViolation: return "KvlViolation";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::SingularImpedance: return "SingularImpedance";
        case ErrorCode::WrongKind: return "WrongKind";
        case ErrorCode::DuplicateBus: return "DuplicateBus";
        case ErrorCode::UnknownBus: return "UnknownBus";
        case ErrorCode::InvalidLine: return "InvalidLine";
        case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorCode::NoVoltageSource: return "NoVoltageSource";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::SingularReducedSystem: return "SingularReducedSystem";
        case ErrorCode::MissingZeroSequence: return "MissingZeroSequence";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace triphase

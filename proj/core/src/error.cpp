#include "mwd/error.hpp"

namespace mwd {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::NonMonotonicDepth: return "NonMonotonicDepth";
        case ErrorCode::IrregularDepthStep: return "IrregularDepthStep";
        case ErrorCode::RaggedSignals: return "RaggedSignals";
        case ErrorCode::NonFiniteSample: return "NonFiniteSample";
        case ErrorCode::NegativeAssay: return "NegativeAssay";
        case ErrorCode::PercentOutOfRange: return "PercentOutOfRange";
        case ErrorCode::DuplicateHoleId: return "DuplicateHoleId";
        case ErrorCode::InvalidHole: return "InvalidHole";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::ZeroSignal: return "ZeroSignal";
        case ErrorCode::NonPositiveSample: return "NonPositiveSample";
        case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateTarget: return "DegenerateTarget";
        case ErrorCode::IllConditionedKernel: return "IllConditionedKernel";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::RegistryMismatch: return "RegistryMismatch";
        case ErrorCode::WrongModelKind: return "WrongModelKind";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::ModelFormat: return "ModelFormat";
        case ErrorCode::TooFewHoles: return "TooFewHoles";
        case ErrorCode::TooFewBlasts: return "TooFewBlasts";
        case ErrorCode::MissingTarget: return "MissingTarget";
        case ErrorCode::AugmentEqualsTarget: return "AugmentEqualsTarget";
        case ErrorCode::ConstantInput: return "ConstantInput";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::CodeMissing: return "CodeMissing";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::MismatchedProvenance: return "MismatchedProvenance";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidSpec:
        case ErrorCode::InvalidParams:
        case ErrorCode::AugmentEqualsTarget:
        case ErrorCode::WrongModelKind:
        case ErrorCode::UnknownColumn:
            return ErrorCategory::config;
        case ErrorCode::ZeroSignal:
        case ErrorCode::DegenerateMatrix:
        case ErrorCode::IllConditionedKernel:
        case ErrorCode::ConstantInput:
            return ErrorCategory::numeric;
        default:
            return ErrorCategory::data;
    }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

}  // namespace mwd

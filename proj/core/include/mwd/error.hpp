#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mwd {

enum class ErrorCode {
    // datamodel
    MissingColumn,
    UnknownColumn,
    NonMonotonicDepth,
    IrregularDepthStep,
    RaggedSignals,
    NonFiniteSample,
    NegativeAssay,
    PercentOutOfRange,
    DuplicateHoleId,
    InvalidHole,
    // features
    TooShort,
    ZeroSignal,
    NonPositiveSample,
    DegenerateMatrix,
    LengthMismatch,
    // models
    DegenerateTarget,
    IllConditionedKernel,
    SingleClass,
    RegistryMismatch,
    WrongModelKind,
    InvalidParams,
    ModelFormat,
    // validation
    TooFewHoles,
    TooFewBlasts,
    MissingTarget,
    AugmentEqualsTarget,
    ConstantInput,
    TooFewPoints,
    CodeMissing,
    // synth
    InvalidSpec,
    MismatchedProvenance,
    // io
    IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Broad failure category used for process exit codes.
enum class ErrorCategory { config, data, numeric };

ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

}  // namespace mwd

#pragma once

#include <stdexcept>
#include <string>

namespace erwlab {

enum class ErrorCode {
    SyntaxError,
    UnknownIdentifier,
    ArityMismatch,
    DomainError,
    DivisionByZero,
    NonsmoothAtPoint,
    OrderUnsupported,
    PartitionOverlap,
    ProbabilityOutOfRange,
    MomentMissing,
    DomainViolation,
    UnknownPreset,
    ParameterOutOfRange,
    NoRootInDomain,
    MultipleRoots,
    TauAtLeastOne,
    JacobianNonsmooth,
    LyapunovSingular,
    TauEqualsOne,
    UnsupportedModel,
    TooManyPaths,
    WrongRegime,
    ComplexTopEigenvalue,
    MissingLEstimates,
    NonLatticeModel,
    InsufficientBinCounts,
    WrongDerivativeRegime,
    DivergenceGuard,
    OverflowGuard,
    ConfigInvalid,
};

/// kebab-case name used in reports and CLI diagnostics
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace erwlab

#include "erwlab/error.hpp"

namespace erwlab {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SyntaxError: return "syntax-error";
        case ErrorCode::UnknownIdentifier: return "unknown-identifier";
        case ErrorCode::ArityMismatch: return "arity-mismatch";
        case ErrorCode::DomainError: return "domain-error";
        case ErrorCode::DivisionByZero: return "division-by-zero";
        case ErrorCode::NonsmoothAtPoint: return "nonsmooth-at-point";
        case ErrorCode::OrderUnsupported: return "order-unsupported";
        case ErrorCode::PartitionOverlap: return "partition-overlap";
        case ErrorCode::ProbabilityOutOfRange: return "probability-out-of-range";
        case ErrorCode::MomentMissing: return "moment-missing";
        case ErrorCode::DomainViolation: return "domain-violation";
        case ErrorCode::UnknownPreset: return "unknown-preset";
        case ErrorCode::ParameterOutOfRange: return "parameter-out-of-range";
        case ErrorCode::NoRootInDomain: return "no-root-in-domain";
        case ErrorCode::MultipleRoots: return "multiple-roots";
        case ErrorCode::TauAtLeastOne: return "tau-at-least-one";
        case ErrorCode::JacobianNonsmooth: return "jacobian-nonsmooth";
        case ErrorCode::LyapunovSingular: return "lyapunov-singular";
        case ErrorCode::TauEqualsOne: return "tau-equals-one";
        case ErrorCode::UnsupportedModel: return "unsupported-model";
        case ErrorCode::TooManyPaths: return "too-many-paths";
        case ErrorCode::WrongRegime: return "wrong-regime";
        case ErrorCode::ComplexTopEigenvalue: return "complex-top-eigenvalue";
        case ErrorCode::MissingLEstimates: return "missing-L-estimates";
        case ErrorCode::NonLatticeModel: return "non-lattice-model";
        case ErrorCode::InsufficientBinCounts: return "insufficient-bin-counts";
        case ErrorCode::WrongDerivativeRegime: return "wrong-derivative-regime";
        case ErrorCode::DivergenceGuard: return "divergence-guard";
        case ErrorCode::OverflowGuard: return "overflow-guard";
        case ErrorCode::ConfigInvalid: return "config-invalid";
    }
    return "unknown";
}

}  // namespace erwlab

#include "bifield/errors.hpp"

namespace bifield {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::asymmetric_support: return "AsymmetricSupport";
        case ErrorKind::zero_displacement: return "ZeroDisplacement";
        case ErrorKind::not_normalized: return "NotNormalized";
        case ErrorKind::reducible_support: return "ReducibleSupport";
        case ErrorKind::invalid_step_distribution: return "InvalidStepDistribution";
        case ErrorKind::not_subcritical: return "NotSubcritical";
        case ErrorKind::tail_violation: return "TailViolation";
        case ErrorKind::division_by_zero_rate: return "DivisionByZeroRate";
        case ErrorKind::deadlock_no_events: return "DeadlockNoEvents";
        case ErrorKind::horizon_too_large: return "HorizonTooLarge";
        case ErrorKind::quadrature_under_resolved: return "QuadratureUnderResolved";
        case ErrorKind::unstable_step: return "UnstableStep";
        case ErrorKind::non_positive_detected: return "NonPositiveDetected";
        case ErrorKind::table_horizon_too_short: return "TableHorizonTooShort";
        case ErrorKind::no_convergence_within_budget: return "NoConvergenceWithinBudget";
        case ErrorKind::degenerate_sequence: return "DegenerateSequence";
        case ErrorKind::bound_violated: return "BoundViolated";
        case ErrorKind::budget_exceeded: return "BudgetExceeded";
        case ErrorKind::insufficient_samples: return "InsufficientSamples";
        case ErrorKind::parse_error: return "ParseError";
        case ErrorKind::validation_error: return "ValidationError";
        case ErrorKind::usage_error: return "UsageError";
        case ErrorKind::io_error: return "IoError";
    }
    return "UnknownError";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage_error:
            return 2;
        case ErrorKind::asymmetric_support:
        case ErrorKind::zero_displacement:
        case ErrorKind::not_normalized:
        case ErrorKind::reducible_support:
        case ErrorKind::invalid_step_distribution:
        case ErrorKind::not_subcritical:
        case ErrorKind::tail_violation:
        case ErrorKind::parse_error:
        case ErrorKind::validation_error:
            return 3;
        default:
            return 4;
    }
}

}  // namespace bifield

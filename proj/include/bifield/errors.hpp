// Typed error conditions shared by all modules.  Each kind maps onto one of
// the process exit-code families used by the command line tool:
//   2 usage, 3 validation, 4 numerical/runtime, 5 acceptance failure.
#pragma once

#include <stdexcept>
#include <string>

namespace bifield {

enum class ErrorKind {
    // step distributions
    asymmetric_support,
    zero_displacement,
    not_normalized,
    reducible_support,
    // model assembly
    invalid_step_distribution,
    not_subcritical,
    tail_violation,
    division_by_zero_rate,
    // simulation
    deadlock_no_events,
    horizon_too_large,
    // quadrature / ODE integration
    quadrature_under_resolved,
    unstable_step,
    non_positive_detected,
    table_horizon_too_short,
    no_convergence_within_budget,
    // bounds machinery
    degenerate_sequence,
    bound_violated,
    // truncated master equation
    budget_exceeded,
    insufficient_samples,
    // configuration / CLI
    parse_error,
    validation_error,
    usage_error,
    io_error,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind) noexcept;

// Exit-code family for the CLI.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace bifield

// End-to-end verification pipeline.  Each numbered check exercises one
// promised property of the laboratory against frozen tolerances, on the
// two reference models (binary splits; binary plus ternary) and on the
// cap-certified small instance.  Deterministic for a fixed seed.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bifield {

struct CheckResult {
    int number = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string detail;  // measured numbers backing the verdict
};

struct AcceptanceReport {
    std::vector<CheckResult> checks;
    bool all_passed() const;
};

// Runs the numbered checks (all of them when `only` is empty) and prints
// one line per check to `log` as it finishes.  A check that throws is
// reported as failed with the error text; the harness never throws.
AcceptanceReport run_acceptance(std::ostream& log, std::uint64_t seed = 1,
                                const std::vector<int>& only = {});

// Stable JSON summary (no timings, so reruns are byte-identical).
void write_acceptance_json(const AcceptanceReport& report, std::ostream& out);

}  // namespace bifield

// Command layer: executes one CLI verb against a resolved configuration and
// persists the results.  Every run writes the fully resolved configuration,
// the verb's data files, and a manifest listing each artifact with a content
// hash.  With a fixed config and seed the data files are byte identical
// across runs; only the manifest's wall time differs.
#pragma once

#include <string>

#include "bifield/config.hpp"

namespace bifield {

// Verbs: validate, kernel, simulate, moments, cumulants, bounds, oracle,
// verify-all.  Returns the process exit code: 0 success, 2 usage error,
// 3 parse or validation error, 4 numerical failure, 5 failed check in
// verify-all.  Progress and seeds go to stdout, diagnostics to stderr.
int run_command(const std::string& verb, const ExperimentConfig& config);

}  // namespace bifield

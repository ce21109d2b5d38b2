// Experiment configuration: one JSON document describes one experiment.
// Parsing is strict (unknown keys are rejected by name), every field has a
// documented default, and command-line overrides address fields by dotted
// path with precedence overrides > file > defaults.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bifield/model.hpp"

namespace bifield {

struct SimSettings {
    int torus_side = 32;
    double t_max = 1.0;
    // Empty in the file means "record only at t_max"; resolved at parse.
    std::vector<double> record_times;
    long long replicates = 10000;
};

struct HierarchySettings {
    int torus_side = 32;
    int max_order = 4;
    double t_max = 1.0;
    int steps = 100;  // uniform grid 0..t_max
};

struct CumulantSettings {
    int max_order = 4;
    double tol = 1e-8;
    int torus_side = 32;
    double initial_horizon = 0.0;  // <= 0: start from 4 / gap
    int max_doublings = 12;
};

struct OracleSettings {
    int torus_side = 3;
    int cap = 4;
    std::vector<double> times = {1.0, 3.0};
    long long replicates = 100000;
};

struct ExperimentConfig {
    ModelParams model;  // defaults to the binary reference model
    SimSettings sim;
    HierarchySettings hierarchy;
    CumulantSettings cumulants;
    OracleSettings oracle;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
};

// The documented defaults: binary splitting at rate 0.3 over simple walks,
// unit death rate, immigration 0.1, certified tail (1.0, 0.6).
ExperimentConfig default_config();

// Strict parse of a JSON document given as text, then dotted-path
// overrides ("model.death_rate=1.2"); the override value is parsed as JSON
// when possible and taken as a string otherwise.  The fully resolved model
// is validated before returning.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});

// Same from a file; throws usage_error when the file cannot be read.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {});

// Serialization of the fully resolved configuration, stable across runs.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace bifield

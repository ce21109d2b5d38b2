// Transition kernel of the effective random walk that transports moments:
// a single particle jumping at rate jump_rate with law jump_law, plus the
// branching smearing acting at rate spread_rate with law spread_law.  Its
// Fourier transform decays like exp(-t * decay(k)) with
//   decay(k) = jump_rate (1 - symbol_a(k)) + spread_rate (1 - symbol_b(k)),
// so probabilities are recovered by cosine quadrature over the frequency
// torus [-pi, pi)^d (midpoint tensor grid, error estimated by comparing
// against the half-resolution grid).
#pragma once

#include <vector>

#include "bifield/lattice.hpp"
#include "bifield/step_distribution.hpp"

namespace bifield {

struct EffectiveWalk {
    double jump_rate = 0.0;
    StepDistribution jump_law;
    double spread_rate = 0.0;
    StepDistribution spread_law;
};

// Checks rates nonnegative, at least one positive, laws validated.
EffectiveWalk make_effective_walk(double jump_rate, StepDistribution jump_law,
                                  double spread_rate, StepDistribution spread_law);

double frequency_decay(const EffectiveWalk& walk, const std::vector<double>& freq);

struct QuadratureOptions {
    // log2 of nodes per axis; 0 picks the default (9 for d <= 2, 6 for d = 3).
    int log2_nodes = 0;
    // Threshold on the resolution-doubling error estimate.
    double tolerance = 1e-8;
};

// Probability that the walk started at `from` sits at `to` after time t.
// Exact 0/1 at t = 0.  Throws QuadratureUnderResolved when the comparison
// of the full and half resolution grids exceeds opts.tolerance.
double transition_probability(const EffectiveWalk& walk, double t,
                              const IntVec& from, const IntVec& to,
                              const QuadratureOptions& opts = {},
                              double* error_estimate_out = nullptr);

// Same walk wrapped on the torus of the given side: exact discrete Fourier
// sum over frequencies 2 pi j / side.
double torus_transition_probability(const EffectiveWalk& walk, int side, double t,
                                    const IntVec& site);

// Whole-torus kernel field g(x) = P(walk at x at time t | at 0 at time 0),
// flat site indexing per TorusGeometry.
std::vector<double> torus_propagator(const EffectiveWalk& walk, int side,
                                     int dimension, double t);

}  // namespace bifield

// Symmetric step distributions on the integer lattice and their Fourier
// symbols.  A step law is a finite list of (displacement, weight) pairs;
// validation enforces: no zero displacement, no duplicates, weights
// positive, total weight 1 within 1e-12, mirror symmetry (weight of -z
// equals weight of z), and irreducibility (the support generates the whole
// lattice as a group).
#pragma once

#include <utility>
#include <vector>

#include "bifield/lattice.hpp"

namespace bifield {

struct StepDistribution {
    int dimension = 0;
    std::vector<std::pair<IntVec, double>> entries;

    double weight_of(const IntVec& z) const {
        for (const auto& [v, p] : entries)
            if (v == z) return p;
        return 0.0;
    }
};

// Checks all invariants and returns the distribution with entries in a
// canonical (lexicographic) order.  Throws Error on violation.
StepDistribution validate_step_distribution(
    const std::vector<std::pair<IntVec, double>>& entries, int dimension);

// True when the integer span of the vectors is the full lattice Z^d,
// decided by gcd reduction of the maximal minors of the support matrix.
bool support_generates_lattice(const std::vector<IntVec>& vectors, int dimension);

// Fourier symbol: sum_z weight(z) cos(freq . z).  Real by symmetry, equals
// 1 at freq = 0 and lies in [-1, 1].
double symbol(const StepDistribution& dist, const std::vector<double>& freq);

// Nearest-neighbour symmetric walk: weight 1/(2d) on each +-unit vector.
StepDistribution simple_walk(int dimension);

}  // namespace bifield

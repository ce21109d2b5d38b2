// Exhaustive finite-state reference for small instances.  Restricting the
// dynamics to a torus with a hard per-site occupancy cap turns the process
// into a finite continuous-time Markov chain whose law can be computed to
// near machine precision and held against the event-driven simulator.
//
// Cap policy: any event whose result would push some site above the cap is
// disabled outright (its rate is removed, nothing is redirected).  Blocked
// events only ever remove births, so the truncated chain is stochastically
// below the free process, and the probability mass sitting on configurations
// with a site at the cap bounds the distortion of low-occupancy marginals.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "bifield/lattice.hpp"
#include "bifield/model.hpp"
#include "bifield/simulator.hpp"

namespace bifield {

// Bijection between occupancy vectors {0..cap}^{side^dim} and the dense
// index range 0 .. (cap+1)^volume - 1.  Site 0 is the fastest digit, so
// index % (cap+1) is the occupancy of the origin.
class TruncatedStateSpace {
  public:
    TruncatedStateSpace(int dimension, int side, int cap,
                        std::int64_t state_budget = 2'000'000);

    const TorusGeometry& geometry() const noexcept { return geom_; }
    int cap() const noexcept { return cap_; }
    std::int64_t volume() const noexcept { return volume_; }
    std::int64_t states() const noexcept { return states_; }

    std::int64_t encode(const std::vector<int>& counts) const;
    void decode(std::int64_t index, std::vector<int>& counts) const;

  private:
    TorusGeometry geom_;
    int cap_ = 0;
    std::int64_t volume_ = 0;
    std::int64_t states_ = 0;
};

// Conservative rate matrix in adjacency form: rows[s] lists the merged
// off-diagonal transitions out of s, diagonal[s] is minus their sum.
struct RateMatrix {
    std::vector<std::vector<std::pair<std::int64_t, double>>> rows;
    std::vector<double> diagonal;
    double max_exit_rate = 0.0;

    std::int64_t size() const noexcept {
        return static_cast<std::int64_t>(diagonal.size());
    }
    std::int64_t nonzeros() const noexcept;
};

// Assembles the truncated generator.  Immigration adds one particle where
// the cap allows it; deaths remove one; jumps move one particle and are
// blocked when the target site is full; a split into l keeps the parent
// and places l-1 offspring by an ordered displacement tuple, each tuple a
// separate event carrying the product of step weights, blocked as a whole
// when the combined placement would overfill any site.
RateMatrix build_generator(const ValidatedModel& model,
                           const TruncatedStateSpace& space);

// Law of the chain at time t started from `initial` (point mass at the
// empty configuration when omitted), computed by uniformization in
// segments so the Poisson weights stay well conditioned.  The result is a
// probability vector up to roundoff.
std::vector<double> distribution_at(const RateMatrix& generator,
                                    const TruncatedStateSpace& space, double t);
std::vector<double> distribution_at(const RateMatrix& generator,
                                    const TruncatedStateSpace& space, double t,
                                    const std::vector<double>& initial);

// Marginal law of the occupancy of the origin, length cap + 1.
std::vector<double> origin_marginal(const std::vector<double>& distribution,
                                    const TruncatedStateSpace& space);

// Probability that some site sits exactly at the cap, i.e. the mass of the
// configurations where the truncation is actively distorting the dynamics.
double overflow_mass(const std::vector<double>& distribution,
                     const TruncatedStateSpace& space);

struct FitReport {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int bins = 0;            // after pooling
    std::uint64_t samples = 0;
};

// Pearson chi-square test of an observed count histogram against the
// reference marginal.  Cells are pooled upward until each carries expected
// count >= 5; the top cell is open ended so observations beyond the cap
// land in it.  Throws insufficient_samples when fewer than two cells
// survive pooling.
FitReport compare_to_simulation(const std::vector<double>& marginal,
                                const Histogram& observed);

// CSV rows "count,probability" for a marginal law.
void write_marginal_csv(std::ostream& out, const std::vector<double>& marginal);

}  // namespace bifield

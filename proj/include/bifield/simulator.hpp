// Event-driven simulation of the branching walk with immigration on a
// periodic torus.  One aggregated exponential clock drives all events;
// given the total rate
//     R = n (jump_rate + death_rate + total_split_rate) + volume * immigration_rate
// the next event happens after Exp(R) and its kind is drawn categorically.
// The draw schedule per event is fixed (waiting time, coarse kind, site or
// particle rank, displacements), so a (seed, replicate_index) pair fully
// determines the trajectory.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "bifield/lattice.hpp"
#include "bifield/model.hpp"
#include "bifield/rng.hpp"

namespace bifield {

struct ParticleField {
    explicit ParticleField(TorusGeometry geometry)
        : geom(geometry) {}

    TorusGeometry geom;
    // site -> positive count; zero counts are never stored.
    std::map<std::int64_t, long long> occupancy;
    long long total = 0;
    double time = 0.0;

    void add(std::int64_t site, long long k = 1) {
        occupancy[site] += k;
        total += k;
    }
    void remove_one(std::int64_t site) {
        auto it = occupancy.find(site);
        it->second -= 1;
        if (it->second == 0) occupancy.erase(it);
        total -= 1;
    }
    long long count_at(std::int64_t site) const {
        auto it = occupancy.find(site);
        return it == occupancy.end() ? 0 : it->second;
    }
    bool consistent() const {
        long long sum = 0;
        for (const auto& [site, c] : occupancy) {
            if (c <= 0) return false;
            sum += c;
        }
        return sum == total;
    }
};

struct SimConfig {
    int torus_side = 32;
    double t_max = 1.0;
    std::vector<double> record_times;
    std::vector<IntVec> observe_sites;  // defaults to the origin
    std::uint64_t seed = 1;
    std::uint64_t replicate_index = 0;
    std::vector<IntVec> initial_particles;
    // Hard cap on executed events and on the projected expected count.
    std::uint64_t event_budget = 100'000'000;
};

enum class EventType { immigration, jump, death, split };

struct EventRecord {
    EventType type;
    double elapsed = 0.0;
    std::int64_t site = -1;         // event site (source / immigrant target)
    std::int64_t jump_target = -1;  // jumps only
    std::vector<std::int64_t> offspring_sites;  // splits only
};

double total_event_rate(const ParticleField& field, const ValidatedModel& model);

// One event applied in place; field.time advances by the waiting time.
// Throws DeadlockNoEvents when the total rate vanishes.
EventRecord step(ParticleField& field, const ValidatedModel& model, SplitMix64& rng);

struct Trajectory {
    std::vector<double> times;
    std::vector<IntVec> sites;
    // counts[i][j]: occupancy of sites[j] at times[i]; right-continuous in
    // time (events stamped exactly at a record time are included).
    std::vector<std::vector<long long>> counts;
    std::vector<long long> totals;
};

Trajectory simulate(const ValidatedModel& model, const SimConfig& cfg);

struct Histogram {
    std::vector<std::uint64_t> bins;
    std::uint64_t total = 0;

    void add(long long value) {
        if (value >= static_cast<long long>(bins.size())) bins.resize(value + 1, 0);
        bins[value] += 1;
        total += 1;
    }
    void merge(const Histogram& other) {
        if (other.bins.size() > bins.size()) bins.resize(other.bins.size(), 0);
        for (std::size_t i = 0; i < other.bins.size(); ++i) bins[i] += other.bins[i];
        total += other.total;
    }
    double probability(std::size_t value) const {
        if (value >= bins.size() || total == 0) return 0.0;
        return static_cast<double>(bins[value]) / static_cast<double>(total);
    }
    // Sample mean of f(count).
    double mean_of(const std::function<double(long long)>& f) const;

    double mean() const;
    double variance() const;  // unbiased
    // k-th factorial moment estimate and its standard error.
    double factorial_moment(int k) const;
    double factorial_moment_se(int k) const;
    // First two count cumulants (mean, variance - mean ... in the factorial
    // scale chi_2 = m_2 - m_1^2) with delta-method standard errors.
    double cumulant1() const { return mean(); }
    double cumulant1_se() const;
    double cumulant2() const;
    double cumulant2_se() const;
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<IntVec> sites;
    std::size_t replicates = 0;
    // histograms[i][j]: counts of sites[j] at times[i] across replicates.
    std::vector<std::vector<Histogram>> histograms;
    std::vector<Histogram> total_histograms;
};

// Runs `replicates` independent trajectories (streams derived from
// (cfg.seed, replicate)) and aggregates count histograms.  Worker count is
// capped by the BIFIELD_THREADS environment variable.  When on_trajectory
// is given it is invoked sequentially in replicate order after all
// simulations finish.
EnsembleStats run_ensemble(
    const ValidatedModel& model, const SimConfig& cfg, std::size_t replicates,
    const std::function<void(std::size_t, const Trajectory&)>& on_trajectory = {});

// Total-variation distance between two empirical count laws.
double empirical_distribution_distance(const Histogram& a, const Histogram& b);

}  // namespace bifield

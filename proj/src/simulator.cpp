#include "bifield/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "bifield/errors.hpp"
#include "bifield/math_util.hpp"

namespace bifield {

namespace {

// Cumulative tables for the per-event categorical draws.
struct EventSampler {
    std::vector<double> jump_cumulative;
    std::vector<IntVec> jump_steps;
    std::vector<double> split_cumulative;  // over offspring count l
    std::vector<int> split_count;
    std::vector<double> offspring_cumulative;
    std::vector<IntVec> offspring_steps;

    explicit EventSampler(const ValidatedModel& model) {
        const ModelParams& p = model.params();
        double acc = 0.0;
        for (const auto& [z, w] : p.jump_law.entries) {
            acc += w;
            jump_cumulative.push_back(acc);
            jump_steps.push_back(z);
        }
        acc = 0.0;
        for (std::size_t i = 0; i < p.split_rates.size(); ++i) {
            if (p.split_rates[i] <= 0.0) continue;
            acc += p.split_rates[i];
            split_cumulative.push_back(acc);
            split_count.push_back(static_cast<int>(i) + 2);
        }
        acc = 0.0;
        for (const auto& [z, w] : p.offspring_law.entries) {
            acc += w;
            offspring_cumulative.push_back(acc);
            offspring_steps.push_back(z);
        }
    }

    static std::size_t pick(const std::vector<double>& cumulative, double u) {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
        if (i >= cumulative.size()) i = cumulative.size() - 1;
        return i;
    }
};

// Particle of the given rank (0-based) in site-index order.
std::int64_t locate_particle(const ParticleField& field, long long rank) {
    for (const auto& [site, count] : field.occupancy) {
        if (rank < count) return site;
        rank -= count;
    }
    throw Error(ErrorKind::validation_error, "particle rank out of range");
}

EventRecord apply_event(ParticleField& field, const ValidatedModel& model,
                        const EventSampler& sampler, SplitMix64& rng, double total_rate) {
    const ModelParams& p = model.params();
    const double volume = static_cast<double>(field.geom.volume());
    const double immigration_block = volume * p.immigration_rate;

    EventRecord rec{};
    const double u_kind = rng.uniform() * total_rate;
    if (u_kind < immigration_block) {
        rec.type = EventType::immigration;
        rec.site = static_cast<std::int64_t>(rng.below(field.geom.volume()));
        field.add(rec.site);
        return rec;
    }

    const long long rank = static_cast<long long>(rng.below(field.total));
    const std::int64_t site = locate_particle(field, rank);
    rec.site = site;
    const double per_particle =
        p.jump_rate + p.death_rate + model.split_total();
    const double u_event = rng.uniform() * per_particle;
    if (u_event < p.jump_rate) {
        rec.type = EventType::jump;
        std::size_t i = EventSampler::pick(sampler.jump_cumulative, rng.uniform());
        rec.jump_target = field.geom.displaced(site, sampler.jump_steps[i]);
        field.remove_one(site);
        field.add(rec.jump_target);
        return rec;
    }
    if (u_event < p.jump_rate + p.death_rate) {
        rec.type = EventType::death;
        field.remove_one(site);
        return rec;
    }
    rec.type = EventType::split;
    const double u_split = (u_event - p.jump_rate - p.death_rate);
    std::size_t li = EventSampler::pick(sampler.split_cumulative, u_split);
    const int l = sampler.split_count[li];
    rec.offspring_sites.reserve(l - 1);
    for (int i = 0; i < l - 1; ++i) {
        std::size_t oi = EventSampler::pick(sampler.offspring_cumulative, rng.uniform());
        std::int64_t target = field.geom.displaced(site, sampler.offspring_steps[oi]);
        rec.offspring_sites.push_back(target);
        field.add(target);
    }
    return rec;
}

int worker_cap() {
    if (const char* env = std::getenv("BIFIELD_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void check_config(const ValidatedModel& model, const SimConfig& cfg) {
    if (cfg.torus_side < 2)
        throw Error(ErrorKind::validation_error, "torus side must be at least 2");
    if (cfg.t_max < 0.0)
        throw Error(ErrorKind::validation_error, "time horizon must be nonnegative");
    double prev = 0.0;
    for (double t : cfg.record_times) {
        if (t < 0.0 || t > cfg.t_max)
            throw Error(ErrorKind::validation_error,
                        "record times must lie in [0, t_max]");
        if (t < prev)
            throw Error(ErrorKind::validation_error, "record times must be sorted");
        prev = t;
    }
    TorusGeometry geom(model.dimension(), cfg.torus_side);

    // Expected event count along the mean-population path; the budget is a
    // hard cap on it as well as on the executed count.
    const ModelParams& p = model.params();
    const double volume = static_cast<double>(geom.volume());
    const double gap = model.gap();
    const double per_particle = p.jump_rate + p.death_rate + model.split_total();
    const double n0 = static_cast<double>(cfg.initial_particles.size());
    const double T = cfg.t_max;
    const double relax = (1.0 - std::exp(-gap * T)) / gap;
    const double integral_mean =
        n0 * relax + volume * p.immigration_rate * (T - relax) / gap;
    const double projected =
        per_particle * integral_mean + volume * p.immigration_rate * T;
    if (projected > static_cast<double>(cfg.event_budget))
        throw Error(ErrorKind::horizon_too_large,
                    "projected event count " + std::to_string(projected) +
                        " exceeds budget " + std::to_string(cfg.event_budget));
}

}  // namespace

double total_event_rate(const ParticleField& field, const ValidatedModel& model) {
    const ModelParams& p = model.params();
    const double per_particle = p.jump_rate + p.death_rate + model.split_total();
    return static_cast<double>(field.total) * per_particle +
           static_cast<double>(field.geom.volume()) * p.immigration_rate;
}

EventRecord step(ParticleField& field, const ValidatedModel& model, SplitMix64& rng) {
    const double rate = total_event_rate(field, model);
    if (rate <= 0.0)
        throw Error(ErrorKind::deadlock_no_events,
                    "empty field without immigration: no event can occur");
    EventSampler sampler(model);
    const double elapsed = rng.exponential(rate);
    EventRecord rec = apply_event(field, model, sampler, rng, rate);
    rec.elapsed = elapsed;
    field.time += elapsed;
    return rec;
}

Trajectory simulate(const ValidatedModel& model, const SimConfig& cfg) {
    check_config(model, cfg);
    TorusGeometry geom(model.dimension(), cfg.torus_side);
    ParticleField field(geom);
    for (const auto& coords : cfg.initial_particles) field.add(geom.encode(coords));

    std::vector<IntVec> sites = cfg.observe_sites;
    if (sites.empty()) sites.emplace_back(model.dimension(), 0);
    std::vector<std::int64_t> site_idx;
    site_idx.reserve(sites.size());
    for (const auto& s : sites) site_idx.push_back(geom.encode(s));

    Trajectory traj;
    traj.times = cfg.record_times;
    traj.sites = sites;
    traj.counts.reserve(traj.times.size());
    traj.totals.reserve(traj.times.size());

    SplitMix64 rng(derive_stream_seed(cfg.seed, cfg.replicate_index));
    EventSampler sampler(model);

    auto record_state = [&](std::size_t idx) {
        std::vector<long long> row(site_idx.size());
        for (std::size_t j = 0; j < site_idx.size(); ++j)
            row[j] = field.count_at(site_idx[j]);
        traj.counts.push_back(std::move(row));
        traj.totals.push_back(field.total);
        (void)idx;
    };

    std::size_t next_record = 0;
    std::uint64_t events = 0;
    double now = 0.0;
    while (true) {
        const double rate = total_event_rate(field, model);
        if (rate <= 0.0) break;  // frozen forever: no particles, no immigration
        const double event_time = now + rng.exponential(rate);
        while (next_record < traj.times.size() && traj.times[next_record] < event_time)
            record_state(next_record++);
        if (event_time > cfg.t_max) {
            now = cfg.t_max;
            break;
        }
        apply_event(field, model, sampler, rng, rate);
        now = event_time;
        if (++events > cfg.event_budget)
            throw Error(ErrorKind::horizon_too_large,
                        "event budget exhausted at t=" + std::to_string(now));
    }
    while (next_record < traj.times.size()) record_state(next_record++);
    field.time = std::max(now, field.time);
    return traj;
}

EnsembleStats run_ensemble(
    const ValidatedModel& model, const SimConfig& cfg, std::size_t replicates,
    const std::function<void(std::size_t, const Trajectory&)>& on_trajectory) {
    if (replicates < 2)
        throw Error(ErrorKind::validation_error, "ensemble needs at least 2 replicates");
    check_config(model, cfg);

    std::vector<IntVec> sites = cfg.observe_sites;
    if (sites.empty()) sites.emplace_back(model.dimension(), 0);

    EnsembleStats stats;
    stats.times = cfg.record_times;
    stats.sites = sites;
    stats.replicates = replicates;
    stats.histograms.assign(stats.times.size(), std::vector<Histogram>(sites.size()));
    stats.total_histograms.assign(stats.times.size(), Histogram{});

    const int workers = std::min<std::size_t>(worker_cap(), replicates);
    std::vector<EnsembleStats> partial(workers);
    for (auto& p : partial) {
        p.histograms.assign(stats.times.size(), std::vector<Histogram>(sites.size()));
        p.total_histograms.assign(stats.times.size(), Histogram{});
    }
    std::vector<Trajectory> kept;
    if (on_trajectory) kept.resize(replicates);

    std::atomic<std::size_t> cursor{0};
    auto work = [&](int w) {
        SimConfig local = cfg;
        local.observe_sites = sites;
        while (true) {
            std::size_t r = cursor.fetch_add(1);
            if (r >= replicates) break;
            local.replicate_index = r;
            Trajectory traj = simulate(model, local);
            for (std::size_t i = 0; i < traj.times.size(); ++i) {
                for (std::size_t j = 0; j < sites.size(); ++j)
                    partial[w].histograms[i][j].add(traj.counts[i][j]);
                partial[w].total_histograms[i].add(traj.totals[i]);
            }
            if (on_trajectory) kept[r] = std::move(traj);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    // Integer histogram merges commute, so aggregation order cannot change
    // the result regardless of the thread schedule.
    for (int w = 0; w < workers; ++w) {
        for (std::size_t i = 0; i < stats.times.size(); ++i) {
            for (std::size_t j = 0; j < sites.size(); ++j)
                stats.histograms[i][j].merge(partial[w].histograms[i][j]);
            stats.total_histograms[i].merge(partial[w].total_histograms[i]);
        }
    }
    if (on_trajectory)
        for (std::size_t r = 0; r < replicates; ++r) on_trajectory(r, kept[r]);
    return stats;
}

double Histogram::mean_of(const std::function<double(long long)>& f) const {
    if (total == 0) throw Error(ErrorKind::insufficient_samples, "empty histogram");
    double acc = 0.0;
    for (std::size_t n = 0; n < bins.size(); ++n)
        if (bins[n]) acc += f(static_cast<long long>(n)) * static_cast<double>(bins[n]);
    return acc / static_cast<double>(total);
}

double Histogram::mean() const {
    return mean_of([](long long n) { return static_cast<double>(n); });
}

double Histogram::variance() const {
    if (total < 2) throw Error(ErrorKind::insufficient_samples, "variance needs 2 samples");
    const double m = mean();
    double ss = mean_of([m](long long n) {
        double d = static_cast<double>(n) - m;
        return d * d;
    });
    return ss * static_cast<double>(total) / static_cast<double>(total - 1);
}

double Histogram::factorial_moment(int k) const {
    return mean_of([k](long long n) { return falling_factorial(n, k); });
}

double Histogram::factorial_moment_se(int k) const {
    if (total < 2) throw Error(ErrorKind::insufficient_samples, "SE needs 2 samples");
    const double m = factorial_moment(k);
    double ss = mean_of([k, m](long long n) {
        double d = falling_factorial(n, k) - m;
        return d * d;
    });
    double var = ss * static_cast<double>(total) / static_cast<double>(total - 1);
    return std::sqrt(var / static_cast<double>(total));
}

double Histogram::cumulant1_se() const { return factorial_moment_se(1); }

double Histogram::cumulant2() const {
    double m1 = factorial_moment(1);
    return factorial_moment(2) - m1 * m1;
}

double Histogram::cumulant2_se() const {
    if (total < 2) throw Error(ErrorKind::insufficient_samples, "SE needs 2 samples");
    // Delta method for chi2 = m2 - m1^2 with sample covariances of the
    // falling factorials f1, f2.
    const double m1 = factorial_moment(1);
    const double m2 = factorial_moment(2);
    const double e11 = mean_of([](long long n) {
        double f = falling_factorial(n, 1);
        return f * f;
    });
    const double e22 = mean_of([](long long n) {
        double f = falling_factorial(n, 2);
        return f * f;
    });
    const double e12 = mean_of([](long long n) {
        return falling_factorial(n, 1) * falling_factorial(n, 2);
    });
    const double v11 = e11 - m1 * m1;
    const double v22 = e22 - m2 * m2;
    const double v12 = e12 - m1 * m2;
    double var = v22 + 4.0 * m1 * m1 * v11 - 4.0 * m1 * v12;
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / static_cast<double>(total));
}

double empirical_distribution_distance(const Histogram& a, const Histogram& b) {
    if (a.total == 0 || b.total == 0)
        throw Error(ErrorKind::insufficient_samples, "empty histogram");
    std::size_t n = std::max(a.bins.size(), b.bins.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dist += std::fabs(a.probability(i) - b.probability(i));
    return 0.5 * dist;
}

}  // namespace bifield

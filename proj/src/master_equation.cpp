#include "bifield/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "bifield/errors.hpp"
#include "bifield/math_util.hpp"

namespace bifield {

TruncatedStateSpace::TruncatedStateSpace(int dimension, int side, int cap,
                                         std::int64_t state_budget)
    : geom_(dimension, side), cap_(cap) {
    if (cap < 1)
        throw Error(ErrorKind::validation_error, "occupancy cap must be at least 1");
    if (state_budget < 1)
        throw Error(ErrorKind::validation_error, "state budget must be positive");
    volume_ = geom_.volume();
    const std::int64_t base = static_cast<std::int64_t>(cap) + 1;
    states_ = 1;
    for (std::int64_t i = 0; i < volume_; ++i) {
        if (states_ > state_budget / base)
            throw Error(ErrorKind::budget_exceeded,
                        "truncated state space exceeds the state budget");
        states_ *= base;
    }
    if (states_ > state_budget)
        throw Error(ErrorKind::budget_exceeded,
                    "truncated state space exceeds the state budget");
}

std::int64_t TruncatedStateSpace::encode(const std::vector<int>& counts) const {
    if (static_cast<std::int64_t>(counts.size()) != volume_)
        throw Error(ErrorKind::validation_error, "occupancy vector has the wrong length");
    const std::int64_t base = cap_ + 1;
    std::int64_t idx = 0;
    for (std::int64_t i = volume_ - 1; i >= 0; --i) {
        int c = counts[i];
        if (c < 0 || c > cap_)
            throw Error(ErrorKind::validation_error, "occupancy outside the cap range");
        idx = idx * base + c;
    }
    return idx;
}

void TruncatedStateSpace::decode(std::int64_t index, std::vector<int>& counts) const {
    if (index < 0 || index >= states_)
        throw Error(ErrorKind::validation_error, "state index out of range");
    counts.assign(volume_, 0);
    const std::int64_t base = cap_ + 1;
    for (std::int64_t i = 0; i < volume_; ++i) {
        counts[i] = static_cast<int>(index % base);
        index /= base;
    }
}

std::int64_t RateMatrix::nonzeros() const noexcept {
    std::int64_t n = 0;
    for (const auto& row : rows) n += static_cast<std::int64_t>(row.size());
    return n;
}

namespace {

// Sort a scratch row by target and merge duplicates (several events can
// land in the same configuration, e.g. mirrored offspring tuples).
void merge_row(std::vector<std::pair<std::int64_t, double>>& row) {
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < row.size();) {
        std::int64_t tgt = row[i].first;
        double rate = 0.0;
        while (i < row.size() && row[i].first == tgt) rate += row[i++].second;
        row[out++] = {tgt, rate};
    }
    row.resize(out);
}

}  // namespace

RateMatrix build_generator(const ValidatedModel& model,
                           const TruncatedStateSpace& space) {
    const TorusGeometry& geom = space.geometry();
    if (model.dimension() != geom.dimension())
        throw Error(ErrorKind::validation_error,
                    "model and state space dimensions differ");
    const ModelParams& par = model.params();
    const int cap = space.cap();
    const std::int64_t vol = space.volume();
    const std::int64_t n = space.states();

    RateMatrix q;
    q.rows.resize(n);
    q.diagonal.assign(n, 0.0);

    std::vector<int> counts;
    std::vector<int> scratch;
    std::vector<std::pair<std::int64_t, double>> row;
    for (std::int64_t s = 0; s < n; ++s) {
        space.decode(s, counts);
        row.clear();
        for (std::int64_t x = 0; x < vol; ++x) {
            if (par.immigration_rate > 0.0 && counts[x] < cap) {
                counts[x] += 1;
                row.emplace_back(space.encode(counts), par.immigration_rate);
                counts[x] -= 1;
            }
            if (counts[x] == 0) continue;
            const double nx = static_cast<double>(counts[x]);
            if (par.death_rate > 0.0) {
                counts[x] -= 1;
                row.emplace_back(space.encode(counts), par.death_rate * nx);
                counts[x] += 1;
            }
            if (par.jump_rate > 0.0) {
                for (const auto& [z, w] : par.jump_law.entries) {
                    std::int64_t y = geom.displaced(x, z);
                    if (y == x) continue;  // wrapped onto itself: no move
                    if (counts[y] == cap) continue;  // target full: blocked
                    counts[x] -= 1;
                    counts[y] += 1;
                    row.emplace_back(space.encode(counts), par.jump_rate * nx * w);
                    counts[x] += 1;
                    counts[y] -= 1;
                }
            }
            for (int l = 2; l <= par.max_offspring(); ++l) {
                double beta = par.split_rate(l);
                if (beta <= 0.0) continue;
                scratch = counts;
                // Ordered placement tuples; a branch dies the moment a
                // cumulative placement would overfill a site, which drops
                // exactly the blocked events.
                auto place = [&](auto&& self, int remaining, double w) -> void {
                    if (remaining == 0) {
                        row.emplace_back(space.encode(scratch), beta * nx * w);
                        return;
                    }
                    for (const auto& [z, wz] : par.offspring_law.entries) {
                        std::int64_t y = geom.displaced(x, z);
                        if (scratch[y] == cap) continue;
                        scratch[y] += 1;
                        self(self, remaining - 1, w * wz);
                        scratch[y] -= 1;
                    }
                };
                place(place, l - 1, 1.0);
            }
        }
        merge_row(row);
        double exit = 0.0;
        for (const auto& [tgt, rate] : row) exit += rate;
        q.rows[s].assign(row.begin(), row.end());
        q.diagonal[s] = -exit;
        if (exit > q.max_exit_rate) q.max_exit_rate = exit;
    }
    return q;
}

namespace {

// One uniformization segment: p <- e^{a(P - I)} p with P = I + Q/lam and
// a = lam dt.  The Poisson-weighted power series is summed until its
// chopped tail is below 1e-13, then renormalized by the kept weight.
void uniformization_segment(const RateMatrix& q, double lam, double a,
                            std::vector<double>& p, std::vector<double>& v,
                            std::vector<double>& pv, std::vector<double>& acc) {
    const std::int64_t n = q.size();
    double w = std::exp(-a);
    double cum = w;
    v = p;
    acc.assign(n, 0.0);
    for (std::int64_t s = 0; s < n; ++s) acc[s] = w * v[s];
    for (int k = 1;; ++k) {
        pv.assign(n, 0.0);
        for (std::int64_t s = 0; s < n; ++s) {
            double ps = v[s];
            if (ps == 0.0) continue;
            pv[s] += ps * (1.0 + q.diagonal[s] / lam);
            for (const auto& [tgt, rate] : q.rows[s]) pv[tgt] += ps * (rate / lam);
        }
        v.swap(pv);
        w *= a / static_cast<double>(k);
        cum += w;
        for (std::int64_t s = 0; s < n; ++s) acc[s] += w * v[s];
        if (cum >= 1.0 - 1e-13 && static_cast<double>(k) >= a) break;
        if (k > 100000)
            throw Error(ErrorKind::no_convergence_within_budget,
                        "uniformization series failed to converge");
    }
    const double scale = 1.0 / cum;
    for (std::int64_t s = 0; s < n; ++s) p[s] = acc[s] * scale;
}

}  // namespace

std::vector<double> distribution_at(const RateMatrix& generator,
                                    const TruncatedStateSpace& space, double t,
                                    const std::vector<double>& initial) {
    const std::int64_t n = space.states();
    if (generator.size() != n)
        throw Error(ErrorKind::validation_error,
                    "generator size does not match the state space");
    if (static_cast<std::int64_t>(initial.size()) != n)
        throw Error(ErrorKind::validation_error,
                    "initial distribution has the wrong length");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw Error(ErrorKind::validation_error, "time must be finite and nonnegative");

    std::vector<double> p = initial;
    const double lam = generator.max_exit_rate;
    if (t == 0.0 || lam == 0.0) return p;

    // Segments keep a = lam dt <= 64 so the leading Poisson weight stays
    // far from underflow and the series needs O(a) terms.
    const double total = lam * t;
    const int nseg = static_cast<int>(std::ceil(total / 64.0));
    const double a = total / static_cast<double>(nseg);
    std::vector<double> v, pv, acc;
    for (int seg = 0; seg < nseg; ++seg)
        uniformization_segment(generator, lam, a, p, v, pv, acc);
    return p;
}

std::vector<double> distribution_at(const RateMatrix& generator,
                                    const TruncatedStateSpace& space, double t) {
    std::vector<double> p(space.states(), 0.0);
    p[0] = 1.0;  // index 0 encodes the empty configuration
    return distribution_at(generator, space, t, p);
}

std::vector<double> origin_marginal(const std::vector<double>& distribution,
                                    const TruncatedStateSpace& space) {
    if (static_cast<std::int64_t>(distribution.size()) != space.states())
        throw Error(ErrorKind::validation_error,
                    "distribution has the wrong length");
    const std::int64_t base = space.cap() + 1;
    std::vector<double> out(base, 0.0);
    for (std::int64_t s = 0; s < space.states(); ++s)
        out[static_cast<std::size_t>(s % base)] += distribution[s];
    return out;
}

double overflow_mass(const std::vector<double>& distribution,
                     const TruncatedStateSpace& space) {
    if (static_cast<std::int64_t>(distribution.size()) != space.states())
        throw Error(ErrorKind::validation_error,
                    "distribution has the wrong length");
    const std::int64_t base = space.cap() + 1;
    double mass = 0.0;
    for (std::int64_t s = 0; s < space.states(); ++s) {
        std::int64_t rest = s;
        for (std::int64_t i = 0; i < space.volume(); ++i) {
            if (rest % base == space.cap()) {
                mass += distribution[s];
                break;
            }
            rest /= base;
        }
    }
    return mass;
}

FitReport compare_to_simulation(const std::vector<double>& marginal,
                                const Histogram& observed) {
    if (marginal.empty())
        throw Error(ErrorKind::validation_error, "reference marginal is empty");
    if (observed.total == 0)
        throw Error(ErrorKind::insufficient_samples, "observed histogram is empty");
    const double reps = static_cast<double>(observed.total);

    // Per-count expected probabilities; the count just past the marginal
    // carries the leftover mass so the top cell is open ended.
    std::size_t nvals = std::max(marginal.size() + 1, observed.bins.size());
    std::vector<double> prob(nvals, 0.0);
    double head = 0.0;
    for (std::size_t c = 0; c < marginal.size(); ++c) {
        prob[c] = std::max(0.0, marginal[c]);
        head += prob[c];
    }
    prob[marginal.size()] += std::max(0.0, 1.0 - head);

    std::vector<double> expected, seen;
    double e = 0.0, o = 0.0;
    for (std::size_t c = 0; c < nvals; ++c) {
        e += reps * prob[c];
        o += static_cast<double>(c < observed.bins.size() ? observed.bins[c] : 0);
        if (e >= 5.0) {
            expected.push_back(e);
            seen.push_back(o);
            e = 0.0;
            o = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (expected.empty())
            throw Error(ErrorKind::insufficient_samples,
                        "no cell reaches expected count 5");
        expected.back() += e;
        seen.back() += o;
    }
    if (expected.size() < 2)
        throw Error(ErrorKind::insufficient_samples,
                    "fewer than two cells after pooling");

    FitReport report;
    report.bins = static_cast<int>(expected.size());
    report.dof = report.bins - 1;
    report.samples = observed.total;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        double d = seen[i] - expected[i];
        report.statistic += d * d / expected[i];
    }
    report.p_value = chi_square_sf(report.statistic, report.dof);
    return report;
}

void write_marginal_csv(std::ostream& out, const std::vector<double>& marginal) {
    out << "count,probability\n";
    char buf[64];
    for (std::size_t c = 0; c < marginal.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", c, marginal[c]);
        out << buf;
    }
}

}  // namespace bifield

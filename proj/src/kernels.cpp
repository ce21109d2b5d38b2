#include "bifield/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "bifield/errors.hpp"

namespace bifield {

EffectiveWalk make_effective_walk(double jump_rate, StepDistribution jump_law,
                                  double spread_rate, StepDistribution spread_law) {
    if (jump_rate < 0.0 || spread_rate < 0.0)
        throw Error(ErrorKind::validation_error, "walk rates must be nonnegative");
    if (jump_rate == 0.0 && spread_rate == 0.0)
        throw Error(ErrorKind::validation_error, "walk needs a positive rate");
    if (jump_rate > 0.0 && jump_law.entries.empty())
        throw Error(ErrorKind::invalid_step_distribution, "jump law missing");
    if (spread_rate > 0.0 && spread_law.entries.empty())
        throw Error(ErrorKind::invalid_step_distribution, "spread law missing");
    return EffectiveWalk{jump_rate, std::move(jump_law), spread_rate, std::move(spread_law)};
}

double frequency_decay(const EffectiveWalk& walk, const std::vector<double>& freq) {
    double d = 0.0;
    if (walk.jump_rate > 0.0)
        d += walk.jump_rate * (1.0 - symbol(walk.jump_law, freq));
    if (walk.spread_rate > 0.0)
        d += walk.spread_rate * (1.0 - symbol(walk.spread_law, freq));
    return d;
}

namespace {

int default_log2_nodes(int dimension) { return dimension <= 2 ? 9 : 6; }

// Midpoint tensor quadrature of exp(-t decay(k)) cos(k . r) over
// [-pi, pi)^d with nodes_per_axis points per axis.
double quad_eval(const EffectiveWalk& walk, int dimension, double t,
                 const IntVec& r, int nodes_per_axis) {
    const int N = nodes_per_axis;
    const double step = 2.0 * M_PI / N;
    std::vector<double> axis(N);
    for (int j = 0; j < N; ++j) axis[j] = -M_PI + (j + 0.5) * step;

    std::vector<int> idx(dimension, 0);
    std::vector<double> freq(dimension);
    double sum = 0.0;
    while (true) {
        double dot = 0.0;
        for (int a = 0; a < dimension; ++a) {
            freq[a] = axis[idx[a]];
            dot += freq[a] * r[a];
        }
        sum += std::exp(-t * frequency_decay(walk, freq)) * std::cos(dot);
        int a = 0;
        while (a < dimension && ++idx[a] == N) idx[a++] = 0;
        if (a == dimension) break;
    }
    double cells = 1.0;
    for (int a = 0; a < dimension; ++a) cells *= N;
    return sum / cells;
}

}  // namespace

double transition_probability(const EffectiveWalk& walk, double t,
                              const IntVec& from, const IntVec& to,
                              const QuadratureOptions& opts,
                              double* error_estimate_out) {
    const int dimension = std::max<int>(from.size(), 1);
    if (t < 0.0)
        throw Error(ErrorKind::validation_error, "transition time must be nonnegative");
    IntVec r(dimension);
    for (int a = 0; a < dimension; ++a) r[a] = to[a] - from[a];

    int m = opts.log2_nodes > 0 ? opts.log2_nodes : default_log2_nodes(dimension);
    if (m < 2) m = 2;
    const int N = 1 << m;

    double fine = quad_eval(walk, dimension, t, r, N);
    double coarse = quad_eval(walk, dimension, t, r, N / 2);
    double est = std::fabs(fine - coarse);
    if (error_estimate_out) *error_estimate_out = est;
    if (est > opts.tolerance)
        throw Error(ErrorKind::quadrature_under_resolved,
                    "frequency grid too coarse: error estimate " + std::to_string(est));
    return std::clamp(fine, 0.0, 1.0);
}

double torus_transition_probability(const EffectiveWalk& walk, int side, double t,
                                    const IntVec& site) {
    const int dimension = static_cast<int>(site.size());
    const double base = 2.0 * M_PI / side;
    std::vector<int> idx(dimension, 0);
    std::vector<double> freq(dimension);
    double sum = 0.0;
    while (true) {
        double dot = 0.0;
        for (int a = 0; a < dimension; ++a) {
            freq[a] = base * idx[a];
            dot += freq[a] * site[a];
        }
        sum += std::exp(-t * frequency_decay(walk, freq)) * std::cos(dot);
        int a = 0;
        while (a < dimension && ++idx[a] == side) idx[a++] = 0;
        if (a == dimension) break;
    }
    double cells = 1.0;
    for (int a = 0; a < dimension; ++a) cells *= side;
    return sum / cells;
}

std::vector<double> torus_propagator(const EffectiveWalk& walk, int side,
                                     int dimension, double t) {
    TorusGeometry geom(dimension, side);
    const std::int64_t V = geom.volume();
    // Decay rates at all discrete frequencies, once.
    std::vector<IntVec> coords(V);
    for (std::int64_t i = 0; i < V; ++i) coords[i] = geom.decode(i);
    std::vector<double> damp(V);
    const double base = 2.0 * M_PI / side;
    std::vector<double> freq(dimension);
    for (std::int64_t j = 0; j < V; ++j) {
        for (int a = 0; a < dimension; ++a) freq[a] = base * coords[j][a];
        damp[j] = std::exp(-t * frequency_decay(walk, freq));
    }
    std::vector<double> field(V);
    for (std::int64_t x = 0; x < V; ++x) {
        const IntVec& xc = coords[x];
        double sum = 0.0;
        for (std::int64_t j = 0; j < V; ++j) {
            const IntVec& jc = coords[j];
            long long dot = 0;
            for (int a = 0; a < dimension; ++a) dot += static_cast<long long>(jc[a]) * xc[a];
            sum += damp[j] * std::cos(base * dot);
        }
        field[x] = sum / static_cast<double>(V);
    }
    return field;
}

}  // namespace bifield

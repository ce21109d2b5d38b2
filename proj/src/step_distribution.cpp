#include "bifield/step_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bifield/errors.hpp"

namespace bifield {

namespace {

std::string format_vec(const IntVec& v) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
    return os.str();
}

// Determinant of a d x d integer matrix, d <= 3.
long long det_small(const std::vector<const IntVec*>& cols, int d) {
    const auto& a = *cols[0];
    if (d == 1) return a[0];
    const auto& b = *cols[1];
    if (d == 2) return static_cast<long long>(a[0]) * b[1] - static_cast<long long>(a[1]) * b[0];
    const auto& c = *cols[2];
    return static_cast<long long>(a[0]) * (static_cast<long long>(b[1]) * c[2] - static_cast<long long>(b[2]) * c[1])
         - static_cast<long long>(b[0]) * (static_cast<long long>(a[1]) * c[2] - static_cast<long long>(a[2]) * c[1])
         + static_cast<long long>(c[0]) * (static_cast<long long>(a[1]) * b[2] - static_cast<long long>(a[2]) * b[1]);
}

}  // namespace

bool support_generates_lattice(const std::vector<IntVec>& vectors, int dimension) {
    // The subgroup of Z^d generated by the columns has index equal to the
    // gcd of all d x d minors; index 1 means the full lattice.
    const int n = static_cast<int>(vectors.size());
    if (n < dimension) return false;
    long long g = 0;
    std::vector<int> pick(dimension);
    // Iterate over all d-subsets of the support.
    struct Rec {
        int n, d;
        const std::vector<IntVec>& vecs;
        std::vector<int>& pick;
        long long& g;
        bool go(int pos, int start) {
            if (pos == d) {
                std::vector<const IntVec*> cols(d);
                for (int i = 0; i < d; ++i) cols[i] = &vecs[pick[i]];
                long long det = det_small(cols, d);
                g = std::gcd(g, std::llabs(det));
                return g == 1;
            }
            for (int i = start; i <= n - (d - pos); ++i) {
                pick[pos] = i;
                if (go(pos + 1, i + 1)) return true;
            }
            return false;
        }
    } rec{n, dimension, vectors, pick, g};
    if (rec.go(0, 0)) return true;
    return g == 1;
}

StepDistribution validate_step_distribution(
    const std::vector<std::pair<IntVec, double>>& entries, int dimension) {
    if (dimension < 1 || dimension > 3)
        throw Error(ErrorKind::invalid_step_distribution, "dimension must be 1, 2 or 3");
    if (entries.empty())
        throw Error(ErrorKind::invalid_step_distribution, "step distribution has no entries");

    StepDistribution dist;
    dist.dimension = dimension;
    dist.entries = entries;

    for (auto& [z, p] : dist.entries) {
        if (static_cast<int>(z.size()) != dimension)
            throw Error(ErrorKind::invalid_step_distribution,
                        "displacement " + format_vec(z) + " has wrong dimension");
        if (is_zero_vec(z))
            throw Error(ErrorKind::zero_displacement,
                        "zero displacement is not a step");
        if (!(p > 0.0))
            throw Error(ErrorKind::not_normalized,
                        "weight of " + format_vec(z) + " must be positive");
    }

    std::sort(dist.entries.begin(), dist.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < dist.entries.size(); ++i)
        if (dist.entries[i].first == dist.entries[i - 1].first)
            throw Error(ErrorKind::invalid_step_distribution,
                        "duplicate displacement " + format_vec(dist.entries[i].first));

    double total = 0.0;
    for (const auto& [z, p] : dist.entries) total += p;
    if (std::fabs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::not_normalized, "weights sum to " + std::to_string(total));

    for (const auto& [z, p] : dist.entries) {
        double q = dist.weight_of(negated(z));
        if (std::fabs(p - q) > 1e-15)
            throw Error(ErrorKind::asymmetric_support,
                        "mirror weight mismatch at " + format_vec(z));
    }

    std::vector<IntVec> support;
    support.reserve(dist.entries.size());
    for (const auto& [z, p] : dist.entries) support.push_back(z);
    if (!support_generates_lattice(support, dimension))
        throw Error(ErrorKind::reducible_support,
                    "support does not generate the full lattice");

    return dist;
}

double symbol(const StepDistribution& dist, const std::vector<double>& freq) {
    double s = 0.0;
    for (const auto& [z, p] : dist.entries) {
        double dot = 0.0;
        for (int a = 0; a < dist.dimension; ++a) dot += freq[a] * z[a];
        s += p * std::cos(dot);
    }
    return s;
}

StepDistribution simple_walk(int dimension) {
    std::vector<std::pair<IntVec, double>> entries;
    const double w = 1.0 / (2.0 * dimension);
    for (int a = 0; a < dimension; ++a) {
        IntVec e(dimension, 0);
        e[a] = 1;
        entries.emplace_back(e, w);
        e[a] = -1;
        entries.emplace_back(e, w);
    }
    return validate_step_distribution(entries, dimension);
}

}  // namespace bifield

#include "bifield/math_util.hpp"

#include <cmath>
#include <limits>

#include "bifield/errors.hpp"

namespace bifield {

namespace {

// Lower regularized gamma P(a, x) by power series.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw Error(ErrorKind::no_convergence_within_budget, "incomplete gamma series");
}

// Upper regularized gamma Q(a, x) by Lentz continued fraction.
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw Error(ErrorKind::no_convergence_within_budget, "incomplete gamma fraction");
}

}  // namespace

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw Error(ErrorKind::validation_error, "gamma_q domain");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double poisson_pmf(double lambda, int k) {
    if (lambda < 0.0 || k < 0)
        throw Error(ErrorKind::validation_error, "poisson_pmf domain");
    if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::vector<std::vector<int>> compositions(int total, int parts) {
    std::vector<std::vector<int>> out;
    if (parts < 1 || parts > total) return out;
    std::vector<int> cur(parts);
    struct Rec {
        int parts;
        std::vector<int>& cur;
        std::vector<std::vector<int>>& out;
        void go(int pos, int remaining) {
            if (pos == parts - 1) {
                cur[pos] = remaining;
                out.push_back(cur);
                return;
            }
            int slots_after = parts - pos - 1;
            for (int v = 1; remaining - v >= slots_after; ++v) {
                cur[pos] = v;
                go(pos + 1, remaining - v);
            }
        }
    } rec{parts, cur, out};
    rec.go(0, total);
    return out;
}

std::vector<std::vector<int>> partition_multiplicities(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> mult(n, 0);
    // Choose multiplicities of parts n, n-1, ..., 1 recursively.
    struct Rec {
        int n;
        std::vector<int>& mult;
        std::vector<std::vector<int>>& out;
        void go(int part, int remaining) {
            if (part == 0) {
                if (remaining == 0) out.push_back(mult);
                return;
            }
            for (int j = 0; j * part <= remaining; ++j) {
                mult[part - 1] = j;
                go(part - 1, remaining - j * part);
            }
            mult[part - 1] = 0;
        }
    } rec{n, mult, out};
    rec.go(n, n);
    return out;
}

}  // namespace bifield

// Small numeric utilities: regularized incomplete gamma (for chi-square
// tail probabilities), Poisson weights, factorials, content hashing.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bifield {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
// a > 0, x >= 0.  Series for x < a + 1, continued fraction otherwise.
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with dof degrees.
inline double chi_square_sf(double statistic, int dof) {
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

// Poisson(lambda) point mass at k.
double poisson_pmf(double lambda, int k);

// Falling factorial n (n-1) ... (n-k+1) as a double; 1 for k = 0.
inline double falling_factorial(long long n, int k) {
    double out = 1.0;
    for (int i = 0; i < k; ++i) out *= static_cast<double>(n - i);
    return out;
}

inline double factorial(int n) {
    double out = 1.0;
    for (int i = 2; i <= n; ++i) out *= i;
    return out;
}

// Exact binomial coefficient for the small arguments used here.
double binomial(int n, int k);

// FNV-1a 64-bit content hash, used for artifact manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& s);

// All integer compositions of `total` into `parts` strictly positive parts,
// in lexicographic order.  Empty when parts > total or parts < 1.
std::vector<std::vector<int>> compositions(int total, int parts);

// All partition multiplicity vectors (j_1 .. j_n): j_i >= 0 and
// sum i * j_i = n.  Entry [i-1] is the multiplicity of part i.
std::vector<std::vector<int>> partition_multiplicities(int n);

}  // namespace bifield

// Constants and sequences of the moment-bound machinery: the prefactor B
// (an integral of the damped return probability against the certified tail
// coefficient), the combinatorial sequence D_k, its geometric growth rate,
// and the verification of the pointwise factorial-moment bound
//   m_k(t,x) <= k! B^{k-1} D_k exp(-gap t) p(t,x,0)
// against a solved moment table.
#pragma once

#include <cstdint>
#include <vector>

#include "bifield/model.hpp"
#include "bifield/moment_hierarchy.hpp"

namespace bifield {

struct BoundCertificate {
    double B = 1.0;
    std::vector<double> D;          // D_1..D_K
    double growth_estimate = 0.0;   // max of D_{k+1}/D_k over the computed range
    bool growth_stabilized = false; // ratio variation over the last third < 5%
};

struct MarginReport {
    double min_margin = 1.0;        // min over (k, t>0, x) of (bound - m)/bound
    std::vector<double> by_order;   // the same minimum per order
    int argmin_order = 0;
    double argmin_time = 0.0;
    std::int64_t argmin_site = 0;
    long long comparisons = 0;
};

// B = max(1, tail_coeff * int_0^T exp(-gap s) p(s,0,0) ds + analytic tail),
// where the tail margin tail_coeff exp(-gap T) / gap certifies the cutoff.
// quad_horizon <= 0 picks T = 40 / gap.
double B_constant(const ValidatedModel& model, double quad_horizon = 0.0);

// D_1 = 1; for k >= 2 the offspring-weighted double sum over split sizes l,
// truncated once three consecutive l-terms fall below rel_threshold relative
// to the accumulated value.
std::vector<double> D_sequence(double delta, int max_order,
                               double rel_threshold = 1e-15);

// Max of D_{k+1}/D_k over k >= 2.  Optionally reports whether the ratio
// sequence settled (variation over the last third below 5%).  Needs at
// least four entries; zero entries beyond the first are degenerate.
double D_growth_rate(const std::vector<double>& D, bool* stabilized_out = nullptr);

BoundCertificate make_certificate(const ValidatedModel& model, int max_order);

// Checks m_k(t,x) <= k! B^{k-1} D_k exp(-gap t) p(t,x,0) (1 + 1e-8) on every
// table entry with t > 0 and reports the worst relative margin.  A violation
// throws: the inequality is a theorem, so it flags an implementation bug.
// Order 1 saturates the inequality exactly, so sites far below the row peak
// compare two cancellation-noise values; the violation test therefore adds
// an absolute floor of 1e-12 of the peak bound, and margin statistics only
// cover sites whose bound is within four decades of the peak.
MarginReport verify_factorial_bound(const MomentTable& table,
                                    const BoundCertificate& cert,
                                    const ValidatedModel& model);

// Smallest constant on the ladder seed * 2^n, seed = max(B, growth_estimate),
// with sum_x m_k(t,x) <= c^k k! exp(-gap t) on the whole table.
double envelope_constant(const MomentTable& table, const BoundCertificate& cert,
                          const ValidatedModel& model);

// Same ladder driven by precomputed mass curves,
// masses[k-1][i] = sum_x m_k(times[i], x) unnormalized (k! included).
double envelope_constant_from_masses(const std::vector<double>& times,
                                      const std::vector<std::vector<double>>& masses,
                                      const BoundCertificate& cert, double gap);

}  // namespace bifield

// Factorial cumulants of the site occupancy under immigration.  With sources
// arriving at rate gamma per site, chi_l(t) is gamma times the time integral
// of the lattice-summed order-l moment of the single-ancestor cloud; the
// steady values are reached by horizon doubling.  The partition transforms
// between factorial moments and factorial cumulants and the generating
// function of the single-ancestor descendant count round out the toolkit.
#pragma once

#include <iosfwd>
#include <vector>

#include "bifield/model.hpp"
#include "bifield/moment_hierarchy.hpp"

namespace bifield {

struct CumulantVector {
    std::vector<double> values;  // chi_1 .. chi_L
    double time = 0.0;
    bool at_infinity = false;
};

// chi_l = l! sum over partitions of l (multiplicities j_1..j_l, J = sum j_i)
// of (-1)^{J-1} (J-1)! / prod j_i!  prod_i (m_i / i!)^{j_i}.
std::vector<double> moments_to_cumulants(const std::vector<double>& moments);

// Inverse transform, m_l = l! sum over partitions of
// 1 / prod j_i!  prod_i (chi_i / i!)^{j_i}.
std::vector<double> cumulants_to_moments(const std::vector<double>& cumulants);

// chi_l of the occupancy at one site at time t: the immigration rate times
// the trapezoid integral of the summed moment over the table grid, with the
// final partial segment interpolated.  Asking beyond the table horizon
// throws TableHorizonTooShort.
double chi_total(const ValidatedModel& model, int order, double t,
                 const MomentTable& table);

struct SteadyStateOptions {
    int torus_side = 32;
    double initial_horizon = 0.0;  // <= 0 picks 4 / gap
    int max_doublings = 12;
    // When set, the whole computation is repeated on a torus of twice the
    // side and the worst relative discrepancy is written here.
    double* volume_delta_out = nullptr;
};

// Doubles the horizon until every chi_l moves by less than
// tol * max(1, |chi_l|) across a doubling, then certifies the limits
// against chi_l <= c^l l! gamma / gap with the envelope constant c.
CumulantVector steady_state_cumulants(const ValidatedModel& model, int max_order,
                                      double tol = 1e-8,
                                      const SteadyStateOptions& opts = {});

// psi(z, t) = E z^{nu(t)} for the descendant count nu of a single ancestor,
// by integrating d psi / dt = sum_l beta_l (psi^l - psi) + mu (1 - psi).
// Accepts z in [0, 1.3]: the fixed point at 1 attracts from both sides, so
// slightly supercritical arguments stay bounded and finite differences
// across z = 1 are well posed.
double gw_generating_function(const ValidatedModel& model, double z, double t);

void write_json(const CumulantVector& v, std::ostream& out);

}  // namespace bifield

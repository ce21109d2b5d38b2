#include "bifield/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bifield/errors.hpp"
#include "bifield/kernels.hpp"
#include "bifield/math_util.hpp"

namespace bifield {

namespace {

double return_probability(const ValidatedModel& model, double s) {
    if (!model.walk()) return 1.0;
    IntVec origin(static_cast<std::size_t>(model.dimension()), 0);
    return transition_probability(*model.walk(), s, origin, origin);
}

// Composition product sums over the D values: sum over (j_1..j_i >= 1,
// sum = c) of D_{j_1} ... D_{j_i}.
double comp_product_sum(const std::vector<double>& d, int c, int i) {
    double acc = 0.0;
    for (const auto& comp : compositions(c, i)) {
        double prod = 1.0;
        for (int part : comp) prod *= d[static_cast<std::size_t>(part - 1)];
        acc += prod;
    }
    return acc;
}

}  // namespace

double B_constant(const ValidatedModel& model, double quad_horizon) {
    const double gap = model.gap();
    const double coeff = model.params().tail_coeff;
    double horizon = quad_horizon > 0.0 ? quad_horizon : 40.0 / gap;

    // Simpson rule; the integrand is smooth and exponentially damped.
    int n = 4000;
    double h = horizon / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        double s = i * h;
        double f = std::exp(-gap * s) * return_probability(model, s);
        double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * f;
    }
    double integral = acc * h / 3.0;
    double tail = std::exp(-gap * horizon) / gap;  // p <= 1 beyond the cutoff
    return std::max(1.0, coeff * (integral + tail));
}

std::vector<double> D_sequence(double delta, int max_order, double rel_threshold) {
    if (!(delta > 0.0 && delta < 1.0))
        throw Error(ErrorKind::validation_error, "delta must lie in (0, 1)");
    if (max_order < 1)
        throw Error(ErrorKind::validation_error, "max_order must be at least 1");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(max_order));
    d.push_back(1.0);
    for (int k = 2; k <= max_order; ++k) {
        // inner sums depend on l only through min(l-1, parts), so cache them
        // per part count i; i never exceeds k
        std::vector<double> first_by_i(static_cast<std::size_t>(k) + 1, 0.0);
        std::vector<double> second_by_i(static_cast<std::size_t>(k) + 1, 0.0);
        for (int i = 1; i <= k - 1; ++i)
            for (int n = 1; n <= k - i; ++n)
                first_by_i[static_cast<std::size_t>(i)] +=
                    d[static_cast<std::size_t>(n - 1)] * comp_product_sum(d, k - n, i);
        for (int i = 2; i <= k; ++i)
            second_by_i[static_cast<std::size_t>(i)] = comp_product_sum(d, k, i);

        double acc = 0.0;
        int small_streak = 0;
        double power = delta;  // delta^l below, starting at l = 2
        for (int l = 2; small_streak < 3; ++l) {
            power *= delta;
            double term = 0.0;
            for (int i = 1; i <= std::min(l - 1, k - 1); ++i)
                term += binomial(l - 1, i) * first_by_i[static_cast<std::size_t>(i)];
            for (int i = 2; i <= std::min(l - 1, k); ++i)
                term += binomial(l - 1, i) * second_by_i[static_cast<std::size_t>(i)];
            term *= power;
            acc += term;
            if (acc > 0.0 && term < rel_threshold * acc)
                ++small_streak;
            else
                small_streak = 0;
            if (l > 100000)
                throw Error(ErrorKind::no_convergence_within_budget,
                            "split-size sum did not settle");
        }
        d.push_back(acc);
    }
    return d;
}

double D_growth_rate(const std::vector<double>& D, bool* stabilized_out) {
    if (D.size() < 4)
        throw Error(ErrorKind::validation_error,
                    "growth estimation needs at least four sequence entries");
    std::vector<double> ratios;
    for (std::size_t k = 2; k + 1 <= D.size(); ++k) {
        double num = D[k];      // D_{k+1}
        double den = D[k - 1];  // D_k
        if (den <= 0.0 || num <= 0.0)
            throw Error(ErrorKind::degenerate_sequence,
                        "zero entry in the D sequence at order " + std::to_string(k));
        ratios.push_back(num / den);
    }
    double rate = *std::max_element(ratios.begin(), ratios.end());
    if (stabilized_out) {
        std::size_t third = std::max<std::size_t>(ratios.size() / 3, 2);
        std::size_t from = ratios.size() - third;
        double lo = ratios[from], hi = ratios[from], sum = 0.0;
        for (std::size_t i = from; i < ratios.size(); ++i) {
            lo = std::min(lo, ratios[i]);
            hi = std::max(hi, ratios[i]);
            sum += ratios[i];
        }
        double mean = sum / third;
        *stabilized_out = (hi - lo) < 0.05 * mean;
    }
    return rate;
}

BoundCertificate make_certificate(const ValidatedModel& model, int max_order) {
    BoundCertificate cert;
    cert.B = B_constant(model);
    int probe = std::max(max_order, 12);
    std::vector<double> extended = D_sequence(model.params().tail_ratio, probe);
    cert.D.assign(extended.begin(), extended.begin() + max_order);
    cert.growth_estimate = D_growth_rate(extended, &cert.growth_stabilized);
    return cert;
}

MarginReport verify_factorial_bound(const MomentTable& table,
                                    const BoundCertificate& cert,
                                    const ValidatedModel& model) {
    if (static_cast<int>(cert.D.size()) < table.max_order)
        throw Error(ErrorKind::validation_error,
                    "certificate shorter than the table order");
    const double gap = model.gap();
    const TorusGeometry& geom = table.geom;
    std::size_t v = static_cast<std::size_t>(geom.volume());

    MarginReport report;
    report.by_order.assign(static_cast<std::size_t>(table.max_order), 1.0);

    for (std::size_t i = 1; i < table.times.size(); ++i) {
        double t = table.times[i];
        std::vector<double> p;
        if (model.walk()) {
            p = torus_propagator(*model.walk(), geom.side(), geom.dimension(), t);
            for (double& x : p) x = std::max(x, 0.0);
        } else {
            p.assign(v, 0.0);
            p[0] = 1.0;
        }
        double damp = std::exp(-gap * t);
        double p_peak = p[0];  // the return site dominates the propagator
        for (int k = 1; k <= table.max_order; ++k) {
            double prefactor = factorial(k) *
                               std::pow(cert.B, k - 1) *
                               cert.D[static_cast<std::size_t>(k - 1)] * damp;
            // order 1 saturates the inequality, so at sites far below the row
            // peak both sides are cancellation noise from the mode sums; an
            // absolute floor on the row scale keeps the comparison honest,
            // and margins are only recorded where the bound carries at least
            // four significant digits
            double viol_floor = 1e-12 * prefactor * p_peak;
            double margin_floor = 1e-4 * prefactor * p_peak;
            const auto& row = table.field(k, i);
            for (std::size_t x = 0; x < v; ++x) {
                double bound = prefactor * p[x];
                double value = row[x];
                ++report.comparisons;
                if (value > bound * (1.0 + 1e-8) + viol_floor)
                    throw Error(ErrorKind::bound_violated,
                                "moment exceeds its certified bound at order " +
                                    std::to_string(k) + ", t = " + std::to_string(t));
                if (bound <= margin_floor) continue;
                double margin = (bound - value) / bound;
                if (margin < report.by_order[static_cast<std::size_t>(k - 1)])
                    report.by_order[static_cast<std::size_t>(k - 1)] = margin;
                if (margin < report.min_margin) {
                    report.min_margin = margin;
                    report.argmin_order = k;
                    report.argmin_time = t;
                    report.argmin_site = static_cast<std::int64_t>(x);
                }
            }
        }
    }
    return report;
}

double envelope_constant_from_masses(const std::vector<double>& times,
                                      const std::vector<std::vector<double>>& masses,
                                      const BoundCertificate& cert, double gap) {
    double needed = 0.0;  // max over (k, t) of (sum_x m_k / (k! e^{-gap t}))^{1/k}
    for (std::size_t k = 1; k <= masses.size(); ++k) {
        const auto& curve = masses[k - 1];
        if (curve.size() != times.size())
            throw Error(ErrorKind::validation_error,
                        "mass curve length does not match the time grid");
        for (std::size_t i = 0; i < times.size(); ++i) {
            double mass = curve[i];
            if (mass <= 0.0) continue;
            double denom = factorial(static_cast<int>(k)) * std::exp(-gap * times[i]);
            needed = std::max(needed, std::pow(mass / denom, 1.0 / static_cast<double>(k)));
        }
    }
    double c = std::max(cert.B, cert.growth_estimate);
    c = std::max(c, 1.0);
    for (int step = 0; step < 64; ++step) {
        if (c * (1.0 + 1e-8) >= needed) return c;
        c *= 2.0;
    }
    throw Error(ErrorKind::no_convergence_within_budget,
                "envelope constant ladder exhausted");
}

double envelope_constant(const MomentTable& table, const BoundCertificate& cert,
                          const ValidatedModel& model) {
    std::vector<std::vector<double>> masses(
        static_cast<std::size_t>(table.max_order));
    for (int k = 1; k <= table.max_order; ++k) {
        auto& curve = masses[static_cast<std::size_t>(k - 1)];
        curve.reserve(table.times.size());
        for (std::size_t i = 0; i < table.times.size(); ++i) {
            const auto& row = table.field(k, i);
            double mass = 0.0;
            for (double x : row) mass += x;
            curve.push_back(mass);
        }
    }
    return envelope_constant_from_masses(table.times, masses, cert, model.gap());
}

}  // namespace bifield

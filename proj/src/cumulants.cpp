#include "bifield/cumulants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "bifield/bounds.hpp"
#include "bifield/errors.hpp"
#include "bifield/math_util.hpp"

namespace bifield {

namespace {

double summed_row(const MomentTable& table, int order, std::size_t i) {
    const auto& row = table.field(order, i);
    double acc = 0.0;
    for (double x : row) acc += x;
    return acc;
}

}  // namespace

std::vector<double> moments_to_cumulants(const std::vector<double>& moments) {
    int top = static_cast<int>(moments.size());
    std::vector<double> chi(moments.size(), 0.0);
    for (int l = 1; l <= top; ++l) {
        double acc = 0.0;
        for (const auto& mult : partition_multiplicities(l)) {
            int blocks = 0;
            double prod = 1.0;
            for (int i = 1; i <= l; ++i) {
                int j = mult[static_cast<std::size_t>(i - 1)];
                if (j == 0) continue;
                blocks += j;
                prod *= std::pow(moments[static_cast<std::size_t>(i - 1)] / factorial(i), j) /
                        factorial(j);
            }
            double sign = (blocks % 2 == 1) ? 1.0 : -1.0;
            acc += sign * factorial(blocks - 1) * prod;
        }
        chi[static_cast<std::size_t>(l - 1)] = factorial(l) * acc;
    }
    return chi;
}

std::vector<double> cumulants_to_moments(const std::vector<double>& cumulants) {
    int top = static_cast<int>(cumulants.size());
    std::vector<double> m(cumulants.size(), 0.0);
    for (int l = 1; l <= top; ++l) {
        double acc = 0.0;
        for (const auto& mult : partition_multiplicities(l)) {
            double prod = 1.0;
            for (int i = 1; i <= l; ++i) {
                int j = mult[static_cast<std::size_t>(i - 1)];
                if (j == 0) continue;
                prod *= std::pow(cumulants[static_cast<std::size_t>(i - 1)] / factorial(i), j) /
                        factorial(j);
            }
            acc += prod;
        }
        m[static_cast<std::size_t>(l - 1)] = factorial(l) * acc;
    }
    return m;
}

double chi_total(const ValidatedModel& model, int order, double t,
                 const MomentTable& table) {
    if (order < 1 || order > table.max_order)
        throw Error(ErrorKind::validation_error, "order outside the solved table");
    if (t < 0.0)
        throw Error(ErrorKind::validation_error, "time must be nonnegative");
    const auto& times = table.times;
    double horizon = times.back();
    if (t > horizon * (1.0 + 1e-12))
        throw Error(ErrorKind::table_horizon_too_short,
                    "requested time " + std::to_string(t) +
                        " lies beyond the table horizon " + std::to_string(horizon));
    double tt = std::min(t, horizon);

    double integral = 0.0;
    std::size_t i = 0;
    double prev = summed_row(table, order, 0);
    while (i + 1 < times.size() && times[i + 1] <= tt) {
        double cur = summed_row(table, order, i + 1);
        integral += 0.5 * (times[i + 1] - times[i]) * (prev + cur);
        prev = cur;
        ++i;
    }
    if (times[i] < tt) {
        // interior of a segment: interpolate the integrand at tt
        double next = summed_row(table, order, i + 1);
        double frac = (tt - times[i]) / (times[i + 1] - times[i]);
        double at_tt = prev + frac * (next - prev);
        integral += 0.5 * (tt - times[i]) * (prev + at_tt);
    }
    return model.params().immigration_rate * integral;
}

CumulantVector steady_state_cumulants(const ValidatedModel& model, int max_order,
                                      double tol, const SteadyStateOptions& opts) {
    if (max_order < 1)
        throw Error(ErrorKind::validation_error, "max_order must be at least 1");
    if (!(tol > 0.0))
        throw Error(ErrorKind::validation_error, "tolerance must be positive");
    const double gamma = model.params().immigration_rate;
    const double gap = model.gap();
    TorusGeometry geom(model.dimension(), opts.torus_side);

    // Simpson step: the integrands decay like exp(-gap s), so the composite
    // error is about h^4 gamma gap^3 / 180; aim at a quarter of the budget
    // with an extra order of magnitude for the rougher high-order curves.
    double h_cap = max_stable_step(model);
    if (gamma > 0.0) {
        double quad = std::pow(180.0 * 0.25 * tol / (10.0 * gamma * gap * gap * gap), 0.25);
        h_cap = std::min(h_cap, quad);
    }
    double base_horizon = opts.initial_horizon > 0.0 ? opts.initial_horizon : 4.0 / gap;

    for (int attempt = 0; attempt <= opts.max_doublings; ++attempt) {
        double horizon = std::ldexp(base_horizon, attempt);
        // a multiple of four keeps the half horizon a valid Simpson prefix
        long long quarters = std::max<long long>(
            1, static_cast<long long>(std::ceil(horizon / (4.0 * h_cap))));
        long long n = 4 * quarters;
        double h = horizon / static_cast<double>(n);

        HierarchyStepper stepper(model, geom, max_order);
        std::vector<double> times(static_cast<std::size_t>(n) + 1);
        std::vector<std::vector<double>> masses(
            static_cast<std::size_t>(max_order),
            std::vector<double>(static_cast<std::size_t>(n) + 1));
        for (long long j = 0;; ++j) {
            times[static_cast<std::size_t>(j)] = h * static_cast<double>(j);
            for (int k = 1; k <= max_order; ++k)
                masses[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j)] =
                    factorial(k) * stepper.reduced_mass(k);
            if (j == n) break;
            stepper.advance(h);
        }

        auto simpson_prefix = [&](const std::vector<double>& f, long long upto) {
            double acc = f[0] + f[static_cast<std::size_t>(upto)];
            for (long long j = 1; j < upto; ++j)
                acc += f[static_cast<std::size_t>(j)] * ((j % 2 != 0) ? 4.0 : 2.0);
            return acc * h / 3.0;
        };

        std::vector<double> full(static_cast<std::size_t>(max_order));
        bool settled = true;
        for (int k = 1; k <= max_order; ++k) {
            const auto& curve = masses[static_cast<std::size_t>(k - 1)];
            double at_half = gamma * simpson_prefix(curve, n / 2);
            full[static_cast<std::size_t>(k - 1)] = gamma * simpson_prefix(curve, n);
            double moved = std::fabs(full[static_cast<std::size_t>(k - 1)] - at_half);
            if (moved > tol * std::max(1.0, std::fabs(full[static_cast<std::size_t>(k - 1)])))
                settled = false;
        }
        if (!settled) continue;

        // certify against the envelope cap chi_l <= c^l l! gamma / gap
        BoundCertificate cert = make_certificate(model, max_order);
        double c = envelope_constant_from_masses(times, masses, cert, gap);
        for (int l = 1; l <= max_order; ++l) {
            double cap = std::pow(c, l) * factorial(l) * gamma / gap;
            if (full[static_cast<std::size_t>(l - 1)] > cap * (1.0 + 1e-8))
                throw Error(ErrorKind::bound_violated,
                            "steady cumulant exceeds its certified cap at order " +
                                std::to_string(l));
        }

        CumulantVector out{full, horizon, true};
        if (opts.volume_delta_out) {
            SteadyStateOptions wide = opts;
            wide.torus_side = 2 * opts.torus_side;
            wide.volume_delta_out = nullptr;
            CumulantVector big = steady_state_cumulants(model, max_order, tol, wide);
            double delta = 0.0;
            for (int l = 0; l < max_order; ++l)
                delta = std::max(delta,
                                 std::fabs(out.values[static_cast<std::size_t>(l)] -
                                           big.values[static_cast<std::size_t>(l)]) /
                                     std::max(1.0, std::fabs(big.values[static_cast<std::size_t>(l)])));
            *opts.volume_delta_out = delta;
        }
        return out;
    }
    throw Error(ErrorKind::no_convergence_within_budget,
                "steady cumulants did not settle within the doubling budget");
}

double gw_generating_function(const ValidatedModel& model, double z, double t) {
    if (t < 0.0)
        throw Error(ErrorKind::validation_error, "time must be nonnegative");
    if (!(z >= 0.0 && z <= 1.3))
        throw Error(ErrorKind::validation_error,
                    "generating function argument must lie in [0, 1.3]");
    const ModelParams& p = model.params();
    const double mu = p.death_rate;
    const int lmax = p.max_offspring();
    // written so that psi = 1 is an exact fixed point term by term
    auto rhs = [&](double psi) {
        double acc = mu * (1.0 - psi);
        double power = psi;
        for (int l = 2; l <= lmax; ++l) {
            power *= psi;
            double beta = p.split_rate(l);
            if (beta > 0.0) acc += beta * (power - psi);
        }
        return acc;
    };
    if (t == 0.0) return z;
    double h_cap = std::min(0.01, max_stable_step(model));
    long long n = static_cast<long long>(std::ceil(t / h_cap));
    double h = t / static_cast<double>(n);
    double psi = z;
    for (long long i = 0; i < n; ++i) {
        double k1 = rhs(psi);
        double k2 = rhs(psi + 0.5 * h * k1);
        double k3 = rhs(psi + 0.5 * h * k2);
        double k4 = rhs(psi + h * k3);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi;
}

void write_json(const CumulantVector& v, std::ostream& out) {
    char buf[40];
    out << "{\"order\":" << v.values.size() << ",\"time\":";
    if (v.at_infinity) {
        out << "\"infinity\"";
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", v.time);
        out << buf;
    }
    out << ",\"values\":[";
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        if (i) out << ',';
        std::snprintf(buf, sizeof buf, "%.17g", v.values[i]);
        out << buf;
    }
    out << "]}\n";
}

}  // namespace bifield

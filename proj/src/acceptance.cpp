#include "bifield/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <ostream>

#include "bifield/bounds.hpp"
#include "bifield/cumulants.hpp"
#include "bifield/errors.hpp"
#include "bifield/kernels.hpp"
#include "bifield/master_equation.hpp"
#include "bifield/math_util.hpp"
#include "bifield/model.hpp"
#include "bifield/moment_hierarchy.hpp"
#include "bifield/rng.hpp"
#include "bifield/simulator.hpp"
#include "bifield/step_distribution.hpp"

namespace bifield {

namespace {

ModelParams binary_model() {
    ModelParams p;
    p.dimension = 1;
    p.jump_rate = 1.0;
    p.jump_law = simple_walk(1);
    p.death_rate = 1.0;
    p.split_rates = {0.3};
    p.offspring_law = simple_walk(1);
    p.immigration_rate = 0.1;
    p.tail_coeff = 1.0;
    p.tail_ratio = 0.6;
    return p;
}

ModelParams two_split_model() {
    ModelParams p = binary_model();
    p.split_rates = {0.2, 0.1};
    p.tail_ratio = 0.7;
    return p;
}

// Small instance whose per-site cap 4 is essentially never touched: the cap
// tail is dominated by one immigrant family piling onto a single site, so
// low immigration and a low split rate push the overflow mass below 1e-6.
ModelParams capped_model() {
    ModelParams p;
    p.dimension = 1;
    p.jump_rate = 0.5;
    p.jump_law = simple_walk(1);
    p.death_rate = 1.0;
    p.split_rates = {0.05};
    p.offspring_law = simple_walk(1);
    p.immigration_rate = 0.03;
    p.tail_coeff = 1.0;
    p.tail_ratio = 0.6;
    return p;
}

std::vector<double> uniform_grid(double t_max, int steps) {
    std::vector<double> grid(steps + 1);
    for (int i = 0; i <= steps; ++i)
        grid[i] = t_max * static_cast<double>(i) / static_cast<double>(steps);
    return grid;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// ---- check 1: m_1 equals the damped kernel --------------------------------

void check_first_moment(CheckResult& r, std::uint64_t) {
    double worst = 0.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        std::vector<double> grid = uniform_grid(5.0, 200);
        MomentTable table = solve_hierarchy(model, 32, 1, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> kernel = torus_propagator(*model.walk(), 32, 1, grid[i]);
            double damp = std::exp(-model.gap() * grid[i]);
            const std::vector<double>& m1 = table.field(1, i);
            for (std::size_t x = 0; x < kernel.size(); ++x)
                worst = std::max(worst, std::fabs(m1[x] - damp * kernel[x]));
        }
    }
    r.passed = worst < 1e-6;
    r.detail = "sup |m1 - exp(-gap t) p| = " + num(worst) + " (limit 1e-6)";
}

// ---- check 2: kernel normalization and peak -------------------------------

void check_kernel(CheckResult& r, std::uint64_t) {
    double worst_norm = 0.0;
    double worst_exceed = -1.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        for (double t : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            std::vector<double> kernel = torus_propagator(*model.walk(), 32, 1, t);
            double sum = 0.0;
            for (double v : kernel) sum += v;
            worst_norm = std::max(worst_norm, std::fabs(sum - 1.0));
            for (double v : kernel)
                worst_exceed = std::max(worst_exceed, v - kernel[0]);
        }
    }
    r.passed = worst_norm <= 1e-8 && worst_exceed <= 1e-14;
    r.detail = "sup |sum p - 1| = " + num(worst_norm) +
               ", max (p(x) - p(0)) = " + num(worst_exceed);
}

// ---- check 3: factorial moment bound on computed tables -------------------

void check_factorial_bound(CheckResult& r, std::uint64_t) {
    double worst_margin = 1.0;
    double worst_first = 0.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        BoundCertificate cert = make_certificate(model, 4);
        MomentTable table = solve_hierarchy(model, 32, 4, uniform_grid(2.5, 100));
        MarginReport report = verify_factorial_bound(table, cert, model);  // throws on violation
        worst_margin = std::min(worst_margin, report.min_margin);
        worst_first = std::max(worst_first, std::fabs(report.by_order[0]));
    }
    // The order-1 bound is saturated, so its margin is pure accumulated
    // roundoff (about 1e-11 per step at the tracking floor).
    r.passed = worst_first <= 1e-8;
    r.detail = "no violations at tolerance 1+1e-8; |order-1 margin| = " + num(worst_first) +
               ", min margin " + num(worst_margin);
}

// ---- check 4: combinatorial sequence --------------------------------------

double tuple_product_sum(const std::vector<double>& d, int total, int parts) {
    if (parts == 0) return total == 0 ? 1.0 : 0.0;
    double acc = 0.0;
    for (int j = 1; j + parts - 1 <= total; ++j)
        if (j <= static_cast<int>(d.size()))
            acc += d[j - 1] * tuple_product_sum(d, total - j, parts - 1);
    return acc;
}

std::vector<double> brute_force_D(double delta, int kmax, int lmax) {
    std::vector<double> d = {1.0};
    for (int k = 2; k <= kmax; ++k) {
        double acc = 0.0;
        for (int l = 2; l <= lmax; ++l) {
            double term = 0.0;
            for (int i = 1; i <= l - 1; ++i) {
                double inner = 0.0;
                for (int n = 1; n <= k - 1; ++n)
                    inner += d[n - 1] * tuple_product_sum(d, k - n, i);
                if (i >= 2) inner += tuple_product_sum(d, k, i);
                term += binomial(l - 1, i) * inner;
            }
            acc += std::pow(delta, l) * term;
        }
        d.push_back(acc);
    }
    return d;
}

void check_growth_sequence(CheckResult& r, std::uint64_t) {
    std::vector<double> d = D_sequence(0.5, 6);
    bool ok = d[0] == 1.0 && std::fabs(d[1] - 2.0) <= 1e-12;
    std::vector<double> brute = brute_force_D(0.5, 6, 400);
    for (std::size_t i = 0; i < d.size(); ++i)
        ok = ok && std::fabs(d[i] - brute[i]) <= 1e-10 * std::max(1.0, brute[i]);

    std::string rates;
    for (double delta : {0.3, 0.5, 0.7}) {
        std::vector<double> seq = D_sequence(delta, 12);
        bool settled = false;
        double rate = D_growth_rate(seq, &settled);
        ok = ok && settled;
        rates += (rates.empty() ? "" : ", ") + num(rate);
    }
    r.passed = ok;
    r.detail = "D_1 = 1, D_2(1/2) = " + num(d[1]) +
               " vs brute force; ratios settle at " + rates;
}

// ---- check 5: cumulant transforms ------------------------------------------

void check_cumulant_transforms(CheckResult& r, std::uint64_t seed) {
    SplitMix64 rng(derive_stream_seed(seed, 5));
    double worst_rt = 0.0;
    double worst_chi2 = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        int order = 1 + static_cast<int>(rng.below(8));
        std::vector<double> m(order);
        for (double& v : m) v = 0.5 * rng.uniform();
        std::vector<double> chi = moments_to_cumulants(m);
        std::vector<double> back = cumulants_to_moments(chi);
        for (int i = 0; i < order; ++i)
            worst_rt = std::max(worst_rt, std::fabs(back[i] - m[i]));
        if (order >= 2)
            worst_chi2 = std::max(worst_chi2,
                                  std::fabs(chi[1] - (m[1] - m[0] * m[0])));
    }

    const double lambda = 0.8;
    std::vector<double> poisson(8);
    double power = 1.0;
    for (int k = 0; k < 8; ++k) poisson[k] = (power *= lambda);
    std::vector<double> chi = moments_to_cumulants(poisson);
    bool poisson_ok = std::fabs(chi[0] - lambda) <= 1e-12;
    for (int l = 2; l <= 8; ++l)
        poisson_ok = poisson_ok && std::fabs(chi[l - 1]) <= 1e-10;

    r.passed = worst_rt <= 1e-12 && worst_chi2 <= 1e-13 && poisson_ok;
    r.detail = "round trip sup " + num(worst_rt) + ", |chi_2 - (m_2 - m_1^2)| " +
               num(worst_chi2) + ", Poisson residual ok";
}

// ---- check 6: total-population first cumulant ------------------------------

void check_chi_total(CheckResult& r, std::uint64_t) {
    double worst_curve = 0.0;
    double worst_steady = 0.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        MomentTable table = solve_hierarchy(model, 32, 1, uniform_grid(3.0, 300));
        double gamma = params.immigration_rate;
        for (double t : {0.5, 1.0, 2.0, 3.0}) {
            double want = gamma * (1.0 - std::exp(-model.gap() * t)) / model.gap();
            worst_curve = std::max(worst_curve,
                                   std::fabs(chi_total(model, 1, t, table) - want));
        }
        // The envelope bound chi_l <= c^l l! gamma/gap is asserted inside.
        CumulantVector steady = steady_state_cumulants(model, 4, 1e-8);
        worst_steady = std::max(worst_steady,
                                std::fabs(steady.values[0] - gamma / model.gap()));
    }
    r.passed = worst_curve <= 1e-6 && worst_steady <= 1e-8;
    r.detail = "curve error " + num(worst_curve) + ", steady error " +
               num(worst_steady) + ", order-4 bound asserted";
}

// ---- check 7: simulator mean vs closed form --------------------------------

void check_simulator_mean(CheckResult& r, std::uint64_t seed) {
    ValidatedModel model = validate(binary_model());
    const double gap = model.gap();
    SimConfig cfg;
    cfg.torus_side = 32;
    cfg.record_times = {1.0, 3.0, 10.0 / gap};
    cfg.t_max = cfg.record_times.back();
    cfg.seed = derive_stream_seed(seed, 7);
    const std::size_t reps = 10000;
    EnsembleStats stats = run_ensemble(model, cfg, reps);
    double worst_z = 0.0;
    for (std::size_t i = 0; i < cfg.record_times.size(); ++i) {
        const Histogram& h = stats.histograms[i][0];
        double want = 0.1 * (1.0 - std::exp(-gap * cfg.record_times[i])) / gap;
        double se = std::sqrt(h.variance() / static_cast<double>(reps));
        worst_z = std::max(worst_z, std::fabs(h.mean() - want) / se);
    }
    r.passed = worst_z <= 3.0;
    r.detail = "max |mean - closed| = " + num(worst_z) + " standard errors (limit 3)";
}

// ---- check 8: simulator vs truncated master equation -----------------------

void check_master_equation(CheckResult& r, std::uint64_t seed) {
    ModelParams params = capped_model();
    ValidatedModel model = validate(params);
    TruncatedStateSpace space(1, 3, 4);
    RateMatrix gen = build_generator(model, space);

    std::vector<double> law1 = distribution_at(gen, space, 1.0);
    std::vector<double> law3 = distribution_at(gen, space, 3.0);
    double ofl = std::max(overflow_mass(law1, space), overflow_mass(law3, space));

    SimConfig cfg;
    cfg.torus_side = 3;
    cfg.record_times = {1.0, 3.0};
    cfg.t_max = 3.0;
    cfg.seed = derive_stream_seed(seed, 8);
    const std::size_t reps = 100000;
    EnsembleStats stats = run_ensemble(model, cfg, reps);
    FitReport fit1 = compare_to_simulation(origin_marginal(law1, space),
                                           stats.histograms[0][0]);
    FitReport fit3 = compare_to_simulation(origin_marginal(law3, space),
                                           stats.histograms[1][0]);

    double worst_control = 0.0;
    int stream = 80;
    for (double mu : {1.2, 0.8}) {
        ModelParams perturbed = capped_model();
        perturbed.death_rate = mu;
        SimConfig pcfg;
        pcfg.torus_side = 3;
        pcfg.record_times = {3.0};
        pcfg.t_max = 3.0;
        pcfg.seed = derive_stream_seed(seed, stream++);
        EnsembleStats pstats = run_ensemble(validate(perturbed), pcfg, reps);
        FitReport pfit = compare_to_simulation(origin_marginal(law3, space),
                                               pstats.histograms[0][0]);
        worst_control = std::max(worst_control, pfit.p_value);
    }

    r.passed = ofl < 1e-6 && fit1.p_value > 0.001 && fit3.p_value > 0.001 &&
               worst_control < 1e-6;
    r.detail = "overflow " + num(ofl) + ", p(t=1) " + num(fit1.p_value) +
               ", p(t=3) " + num(fit3.p_value) + ", control p " + num(worst_control);
}

// ---- check 9: steady-state convergence --------------------------------------

void check_steady_convergence(CheckResult& r, std::uint64_t seed) {
    ValidatedModel model = validate(binary_model());
    const double gap = model.gap();
    SimConfig cfg;
    cfg.torus_side = 32;
    cfg.record_times = {2.0 / gap, 4.0 / gap, 8.0 / gap, 16.0 / gap};
    cfg.t_max = cfg.record_times.back();
    cfg.seed = derive_stream_seed(seed, 9);
    const std::size_t reps = 10000;
    EnsembleStats stats = run_ensemble(model, cfg, reps);

    const Histogram& h0 = stats.histograms[0][0];
    const Histogram& h1 = stats.histograms[1][0];
    const Histogram& h2 = stats.histograms[2][0];
    const Histogram& h3 = stats.histograms[3][0];
    double tv_a = empirical_distribution_distance(h0, h1);  // T = 2/gap vs 2T
    double tv_b = empirical_distribution_distance(h1, h2);  // T = 4/gap vs 2T
    double tv_c = empirical_distribution_distance(h2, h3);  // T = 8/gap vs 2T

    bool monotone = true;
    const Histogram* hs[] = {&h0, &h1, &h2, &h3};
    for (int i = 0; i + 1 < 4; ++i) {
        double slack1 = 2.0 * std::hypot(hs[i]->cumulant1_se(), hs[i + 1]->cumulant1_se());
        double slack2 = 2.0 * std::hypot(hs[i]->cumulant2_se(), hs[i + 1]->cumulant2_se());
        monotone = monotone &&
                   hs[i + 1]->cumulant1() >= hs[i]->cumulant1() - slack1 &&
                   hs[i + 1]->cumulant2() >= hs[i]->cumulant2() - slack2;
    }

    r.passed = tv_b < tv_a && tv_c < 0.02 && monotone;
    r.detail = "TV " + num(tv_a) + " -> " + num(tv_b) + " -> " + num(tv_c) +
               " (limit 0.02 at T = 8/gap), cumulants monotone within 2 SE: " +
               (monotone ? "yes" : "no");
}

// ---- check 10: splits off gives the Poisson law -----------------------------

void check_poisson_law(CheckResult& r, std::uint64_t seed) {
    ModelParams params = binary_model();
    params.split_rates = {};
    ValidatedModel model = validate(params);
    SimConfig cfg;
    cfg.torus_side = 32;
    cfg.record_times = {10.0};
    cfg.t_max = 10.0;
    cfg.seed = derive_stream_seed(seed, 10);
    const std::size_t reps = 20000;
    EnsembleStats stats = run_ensemble(model, cfg, reps);
    const Histogram& h = stats.histograms[0][0];

    std::vector<double> marginal(7);
    for (int k = 0; k < 7; ++k) marginal[k] = poisson_pmf(0.1, k);
    FitReport fit = compare_to_simulation(marginal, h);
    double z2 = std::fabs(h.cumulant2()) / h.cumulant2_se();

    r.passed = fit.p_value > 0.001 && z2 <= 3.0;
    r.detail = "Poisson fit p " + num(fit.p_value) + ", |chi_2| = " + num(z2) +
               " standard errors (limit 3)";
}

// ---- check 11: two routes to the second moment ------------------------------

void check_duhamel(CheckResult& r, std::uint64_t) {
    double worst = 0.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        MomentTable table = solve_hierarchy(model, 32, 2, uniform_grid(1.0, 100));
        worst = std::max(worst, duhamel_residual(2, table, model));
    }
    r.passed = worst <= 1e-4;
    r.detail = "sup residual between integrator and time-convolution route " +
               num(worst) + " (limit 1e-4)";
}

// ---- check 12: generating-function consistency ------------------------------

void check_generating_function(CheckResult& r, std::uint64_t) {
    double worst_fd = 0.0;
    bool monotone = true;
    double final_gap_to_one = 1.0;
    for (const ModelParams& params : {binary_model(), two_split_model()}) {
        ValidatedModel model = validate(params);
        const double eps = 1e-4;
        for (double t : {0.5, 2.0}) {
            double fd = (gw_generating_function(model, 1.0 + eps, t) -
                         gw_generating_function(model, 1.0 - eps, t)) /
                        (2.0 * eps);
            worst_fd = std::max(worst_fd, std::fabs(fd - std::exp(-model.gap() * t)));
        }
        double prev = 0.0;
        double horizon = 30.0 / model.gap();
        for (int i = 0; i <= 60; ++i) {
            double psi = gw_generating_function(model, 0.0, horizon * i / 60.0);
            monotone = monotone && psi >= prev - 1e-12;
            prev = psi;
        }
        final_gap_to_one = std::min(final_gap_to_one, 1.0 - prev);
    }
    r.passed = worst_fd <= 1e-6 && monotone && final_gap_to_one <= 1e-9;
    r.detail = "FD derivative error " + num(worst_fd) +
               ", extinction curve nondecreasing, 1 - psi_0(30/gap) = " +
               num(final_gap_to_one);
}

struct CheckSpec {
    int number;
    const char* name;
    void (*fn)(CheckResult&, std::uint64_t);
};

const CheckSpec kChecks[] = {
    {1, "first-moment exactness", check_first_moment},
    {2, "kernel normalization and peak bound", check_kernel},
    {3, "factorial moment bound", check_factorial_bound},
    {4, "combinatorial growth sequence", check_growth_sequence},
    {5, "cumulant transforms", check_cumulant_transforms},
    {6, "total-population first cumulant", check_chi_total},
    {7, "simulator mean vs closed form", check_simulator_mean},
    {8, "simulator vs truncated master equation", check_master_equation},
    {9, "steady-state convergence", check_steady_convergence},
    {10, "immigration-death Poisson law", check_poisson_law},
    {11, "second-moment route agreement", check_duhamel},
    {12, "generating-function consistency", check_generating_function},
};

}  // namespace

bool AcceptanceReport::all_passed() const {
    for (const CheckResult& c : checks)
        if (!c.passed) return false;
    return !checks.empty();
}

AcceptanceReport run_acceptance(std::ostream& log, std::uint64_t seed,
                                const std::vector<int>& only) {
    AcceptanceReport report;
    for (const CheckSpec& spec : kChecks) {
        if (!only.empty() &&
            std::find(only.begin(), only.end(), spec.number) == only.end())
            continue;
        CheckResult result;
        result.number = spec.number;
        result.name = spec.name;
        auto start = std::chrono::steady_clock::now();
        try {
            spec.fn(result, seed);
        } catch (const std::exception& e) {
            result.passed = false;
            result.detail = std::string("error: ") + e.what();
        }
        result.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        char line[256];
        std::snprintf(line, sizeof line, "check %2d %-42s %s  (%.2f s)  %s",
                      result.number, result.name.c_str(),
                      result.passed ? "PASS" : "FAIL", result.seconds,
                      result.detail.c_str());
        log << line << "\n";
        report.checks.push_back(std::move(result));
    }
    return report;
}

void write_acceptance_json(const AcceptanceReport& report, std::ostream& out) {
    out << "{\n  \"all_passed\": " << (report.all_passed() ? "true" : "false")
        << ",\n  \"checks\": [\n";
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const CheckResult& c = report.checks[i];
        out << "    {\"number\": " << c.number << ", \"name\": \"" << c.name
            << "\", \"passed\": " << (c.passed ? "true" : "false")
            << ", \"detail\": \"" << c.detail << "\"}"
            << (i + 1 < report.checks.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
}

}  // namespace bifield

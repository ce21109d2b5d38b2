#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bifield/cumulants.hpp"
#include "bifield/errors.hpp"
#include "bifield/moment_hierarchy.hpp"
#include "bifield/rng.hpp"
#include "bifield/simulator.hpp"
#include "bifield/step_distribution.hpp"

using namespace bifield;

namespace {

ModelParams binary_params() {
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

ModelParams two_split_params() {
    ModelParams p = binary_params();
    p.split_rates = {0.2, 0.1};
    p.tail_ratio = 0.7;
    return p;
}

std::vector<double> uniform_grid(double h, int steps) {
    std::vector<double> g(static_cast<std::size_t>(steps + 1));
    for (int i = 0; i <= steps; ++i) g[static_cast<std::size_t>(i)] = i * h;
    return g;
}

// Power-series oracles working in the reduced scale g_k = m_k / k!.
// log(1 + g):  k c_k = k g_k - sum_{j<k} j c_j g_{k-j}.
std::vector<double> series_log(const std::vector<double>& g) {
    std::vector<double> c(g.size());
    for (std::size_t k = 1; k <= g.size(); ++k) {
        double acc = static_cast<double>(k) * g[k - 1];
        for (std::size_t j = 1; j < k; ++j)
            acc -= static_cast<double>(j) * c[j - 1] * g[k - j - 1];
        c[k - 1] = acc / static_cast<double>(k);
    }
    return c;
}

// exp(h) - 1:  k g_k = sum_{j<=k} j h_j g_{k-j} with g_0 = 1.
std::vector<double> series_expm1(const std::vector<double>& h) {
    std::vector<double> g(h.size());
    for (std::size_t k = 1; k <= h.size(); ++k) {
        double acc = static_cast<double>(k) * h[k - 1];
        for (std::size_t j = 1; j < k; ++j)
            acc += static_cast<double>(j) * h[j - 1] * g[k - j - 1];
        g[k - 1] = acc / static_cast<double>(k);
    }
    return g;
}

double fact(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

TEST_SUITE_BEGIN("cumulants");

TEST_CASE("low order transforms by hand") {
    auto one = moments_to_cumulants({0.7});
    CHECK(one[0] == 0.7);
    auto two = moments_to_cumulants({0.5, 0.4});
    CHECK(two[0] == 0.5);
    CHECK(two[1] == doctest::Approx(0.4 - 0.25).epsilon(1e-14));
    // chi_3 = m_3 - 3 m_1 m_2 + 2 m_1^3
    auto three = moments_to_cumulants({0.3, 0.5, 0.7});
    CHECK(three[2] == doctest::Approx(0.7 - 3.0 * 0.3 * 0.5 + 2.0 * 0.027).epsilon(1e-13));
    // m_2 = chi_2 + chi_1^2
    auto back = cumulants_to_moments({0.5, 0.15});
    CHECK(back[1] == doctest::Approx(0.15 + 0.25).epsilon(1e-14));
}

TEST_CASE("poisson counts have a single cumulant") {
    double lambda = 0.8;
    std::vector<double> m(6);
    double pw = 1.0;
    for (int k = 0; k < 6; ++k) m[static_cast<std::size_t>(k)] = (pw *= lambda);
    auto chi = moments_to_cumulants(m);
    CHECK(chi[0] == doctest::Approx(lambda).epsilon(1e-14));
    for (int k = 2; k <= 6; ++k)
        CHECK(std::fabs(chi[static_cast<std::size_t>(k - 1)]) <= 1e-12);
    std::vector<double> pure(6, 0.0);
    pure[0] = lambda;
    auto mm = cumulants_to_moments(pure);
    pw = 1.0;
    for (int k = 1; k <= 6; ++k)
        CHECK(mm[static_cast<std::size_t>(k - 1)] ==
              doctest::Approx(pw *= lambda).epsilon(1e-14));
}

TEST_CASE("transforms match the power series oracles") {
    SplitMix64 rng(20240817);
    for (int rep = 0; rep < 100; ++rep) {
        int order = 1 + static_cast<int>(rng.below(8));
        std::vector<double> m(static_cast<std::size_t>(order));
        for (auto& x : m) x = 2.0 * rng.uniform();
        std::vector<double> g(m.size());
        for (std::size_t k = 0; k < m.size(); ++k)
            g[k] = m[k] / fact(static_cast<int>(k) + 1);

        // the partition sums cancel heavily at order 8 for entries this
        // large, so the two independent routes can only agree to the
        // conditioning of the map, not to machine precision
        auto chi = moments_to_cumulants(m);
        auto want = series_log(g);
        for (std::size_t k = 0; k < m.size(); ++k) {
            double ref = fact(static_cast<int>(k) + 1) * want[k];
            CHECK(std::fabs(chi[k] - ref) <= 1e-8 * std::max(1.0, std::fabs(ref)));
        }

        auto h = series_log(g);  // reduced cumulants; invert independently
        auto ginv = series_expm1(h);
        auto mm = cumulants_to_moments(chi);
        for (std::size_t k = 0; k < m.size(); ++k) {
            double ref = fact(static_cast<int>(k) + 1) * ginv[k];
            CHECK(std::fabs(mm[k] - ref) <= 1e-8 * std::max(1.0, std::fabs(ref)));
        }
    }
}

TEST_CASE("round trip is the identity") {
    SplitMix64 rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        int order = 1 + static_cast<int>(rng.below(8));
        std::vector<double> m(static_cast<std::size_t>(order));
        for (auto& x : m) x = 0.5 * rng.uniform();
        auto back = cumulants_to_moments(moments_to_cumulants(m));
        for (std::size_t k = 0; k < m.size(); ++k)
            CHECK(std::fabs(back[k] - m[k]) <= 1e-12 * std::max(1.0, std::fabs(m[k])));
    }
    // larger entries: the identity still holds to the conditioning limit
    for (int rep = 0; rep < 100; ++rep) {
        int order = 1 + static_cast<int>(rng.below(8));
        std::vector<double> m(static_cast<std::size_t>(order));
        for (auto& x : m) x = 2.0 * rng.uniform();
        auto back = cumulants_to_moments(moments_to_cumulants(m));
        for (std::size_t k = 0; k < m.size(); ++k)
            CHECK(std::fabs(back[k] - m[k]) <= 1e-8 * std::max(1.0, std::fabs(m[k])));
    }
}

TEST_CASE("occupancy cumulant from a table matches the closed form") {
    auto model = validate(binary_params());
    MomentTable table = solve_hierarchy(model, 32, 1, uniform_grid(0.01, 300));
    double gamma = 0.1, gap = model.gap();
    for (double t : {0.5, 1.0, 1.234567, 2.0, 3.0}) {
        double want = gamma * (1.0 - std::exp(-gap * t)) / gap;
        CHECK(chi_total(model, 1, t, table) == doctest::Approx(want).epsilon(1e-6));
    }
    CHECK(chi_total(model, 1, 0.0, table) == 0.0);
    // nondecreasing in t: the integrand is nonnegative
    double prev = 0.0;
    for (double t = 0.25; t <= 3.0; t += 0.25) {
        double cur = chi_total(model, 1, t, table);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("occupancy cumulant scales with the immigration rate") {
    ModelParams p = binary_params();
    auto model = validate(p);
    MomentTable table = solve_hierarchy(model, 16, 2, uniform_grid(0.02, 50));
    p.immigration_rate = 0.2;
    auto doubled = validate(p);
    for (int l : {1, 2})
        CHECK(chi_total(doubled, l, 0.9, table) == 2.0 * chi_total(model, l, 0.9, table));
}

TEST_CASE("table horizon and order guards") {
    auto model = validate(binary_params());
    MomentTable table = solve_hierarchy(model, 8, 1, uniform_grid(0.02, 25));
    try {
        chi_total(model, 1, 0.8, table);
        FAIL("expected TableHorizonTooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::table_horizon_too_short);
    }
    CHECK_THROWS_AS(chi_total(model, 2, 0.3, table), Error);
    CHECK_THROWS_AS(chi_total(model, 1, -0.1, table), Error);
    CHECK_NOTHROW(chi_total(model, 1, 0.5, table));  // exactly the horizon
}

TEST_CASE("steady state reaches the gap ratio") {
    auto model = validate(binary_params());
    CumulantVector s = steady_state_cumulants(model, 4);
    REQUIRE(s.values.size() == 4);
    CHECK(s.at_infinity);
    CHECK(s.values[0] == doctest::Approx(0.1 / 0.7).epsilon(1e-7));
    for (double v : s.values) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    auto wide = validate(two_split_params());
    CumulantVector s2 = steady_state_cumulants(wide, 4);
    CHECK(s2.values[0] == doctest::Approx(0.1 / 0.6).epsilon(1e-7));
}

TEST_CASE("steady state without splits is Poisson") {
    ModelParams p = binary_params();
    p.split_rates = {};
    p.offspring_law = {};
    p.immigration_rate = 0.5;
    auto model = validate(p);
    CumulantVector s = steady_state_cumulants(model, 3);
    CHECK(s.values[0] == doctest::Approx(0.5 / 1.0).epsilon(1e-7));
    CHECK(std::fabs(s.values[1]) <= 1e-12);
    CHECK(std::fabs(s.values[2]) <= 1e-12);
}

TEST_CASE("steady state volume probe") {
    double delta = -1.0;
    SteadyStateOptions opts;
    opts.torus_side = 8;
    opts.volume_delta_out = &delta;
    auto model = validate(binary_params());
    CumulantVector s = steady_state_cumulants(model, 2, 1e-8, opts);
    CHECK(delta >= 0.0);
    CHECK(delta < 1e-2);
    CHECK(s.values[0] == doctest::Approx(0.1 / 0.7).epsilon(1e-6));
}

TEST_CASE("steady state budget exhaustion") {
    SteadyStateOptions opts;
    opts.max_doublings = 0;
    opts.torus_side = 8;
    auto model = validate(binary_params());
    try {
        steady_state_cumulants(model, 1, 1e-14, opts);
        FAIL("expected NoConvergenceWithinBudget");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::no_convergence_within_budget);
    }
}

TEST_CASE("generating function boundary behavior") {
    auto model = validate(binary_params());
    for (double t : {0.3, 1.0, 5.0, 20.0})
        CHECK(gw_generating_function(model, 1.0, t) == 1.0);
    CHECK(gw_generating_function(model, 0.37, 0.0) == 0.37);
    // extinction curve: nondecreasing from 0 toward 1
    double gap = model.gap();
    double prev = -1.0;
    for (double t = 0.0; t <= 30.0 / gap; t += 0.5) {
        double cur = gw_generating_function(model, 0.0, t);
        CHECK(cur >= prev - 1e-12);
        CHECK(cur >= 0.0);
        CHECK(cur <= 1.0 + 1e-12);
        prev = cur;
    }
    CHECK(prev >= 1.0 - 1e-9);
    CHECK_THROWS_AS(gw_generating_function(model, -0.1, 1.0), Error);
    CHECK_THROWS_AS(gw_generating_function(model, 1.5, 1.0), Error);
    CHECK_THROWS_AS(gw_generating_function(model, 0.5, -1.0), Error);
}

TEST_CASE("generating function derivative at one decays with the gap") {
    double eps = 1e-4;
    for (auto params : {binary_params(), two_split_params()}) {
        auto model = validate(params);
        double gap = model.gap();
        for (double t : {0.5, 2.0}) {
            double up = gw_generating_function(model, 1.0 + eps, t);
            double dn = gw_generating_function(model, 1.0 - eps, t);
            double diff = (up - dn) / (2.0 * eps);
            CHECK(diff == doctest::Approx(std::exp(-gap * t)).epsilon(1e-6));
        }
    }
}

TEST_CASE("second derivative at one matches the closed form") {
    // g_2' = c_2 exp(-2 gap t) - gap g_2 with c_2 = sum_l l (l-1) beta_l,
    // so g_2(t) = c_2 (exp(-gap t) - exp(-2 gap t)) / gap.
    double eps = 1e-3;
    for (auto params : {binary_params(), two_split_params()}) {
        auto model = validate(params);
        double gap = model.gap();
        double c2 = 0.0;
        for (int l = 2; l <= model.max_offspring(); ++l)
            c2 += static_cast<double>(l) * (l - 1) * params.split_rate(l);
        for (double t : {0.5, 1.0, 3.0}) {
            double up = gw_generating_function(model, 1.0 + eps, t);
            double dn = gw_generating_function(model, 1.0 - eps, t);
            double second = (up - 2.0 + dn) / (eps * eps);
            double want = c2 * (std::exp(-gap * t) - std::exp(-2.0 * gap * t)) / gap;
            CHECK(std::fabs(second - want) <= 1e-5 * std::max(1.0, want));
        }
    }
}

TEST_CASE("single ancestor ensemble agrees with the generating function") {
    ModelParams p = binary_params();
    p.immigration_rate = 0.0;
    auto model = validate(p);
    double gap = model.gap();
    double t = 1.0;

    SimConfig cfg;
    cfg.torus_side = 16;
    cfg.t_max = t;
    cfg.record_times = {t};
    cfg.seed = 515151;
    cfg.initial_particles = {IntVec{0}};
    EnsembleStats stats = run_ensemble(model, cfg, 200000);
    const Histogram& h = stats.total_histograms[0];

    CHECK(std::fabs(h.factorial_moment(1) - std::exp(-gap * t)) <=
          3.0 * h.factorial_moment_se(1));
    double want2 = 2.0 * 0.3 * (std::exp(-gap * t) - std::exp(-2.0 * gap * t)) / gap;
    CHECK(std::fabs(h.factorial_moment(2) - want2) <= 3.0 * h.factorial_moment_se(2));
}

TEST_CASE("json export") {
    std::ostringstream out;
    write_json(CumulantVector{{0.5, 0.25}, 3.0, false}, out);
    CHECK(out.str() == "{\"order\":2,\"time\":3,\"values\":[0.5,0.25]}\n");
    std::ostringstream inf;
    write_json(CumulantVector{{0.125}, 40.0, true}, inf);
    CHECK(inf.str() == "{\"order\":1,\"time\":\"infinity\",\"values\":[0.125]}\n");
}

TEST_SUITE_END();

#include <doctest.h>

#include <cmath>
#include <vector>

#include "bifield/bounds.hpp"
#include "bifield/errors.hpp"
#include "bifield/math_util.hpp"
#include "bifield/moment_hierarchy.hpp"
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

ModelParams death_only_params() {
    ModelParams p;
    p.dimension = 1;
    p.jump_rate = 0.0;
    p.jump_law = {};
    p.death_rate = 1.0;
    p.split_rates = {};
    p.offspring_law = {};
    p.immigration_rate = 0.0;
    p.tail_coeff = 2.0;
    p.tail_ratio = 0.5;
    return p;
}

std::vector<double> uniform_grid(double h, int steps) {
    std::vector<double> g(static_cast<std::size_t>(steps + 1));
    for (int i = 0; i <= steps; ++i) g[static_cast<std::size_t>(i)] = i * h;
    return g;
}

// Independent composition walker: sums the product of d over all ordered
// i-tuples of positive integers adding to c.  Deliberately recursive and
// cache-free so it shares nothing with the production enumeration.
double tuple_product_sum(const std::vector<double>& d, int c, int i) {
    if (i < 1) return 0.0;
    if (i == 1) {
        if (c < 1 || c > static_cast<int>(d.size())) return 0.0;
        return d[static_cast<std::size_t>(c - 1)];
    }
    double acc = 0.0;
    for (int first = 1; first <= c - i + 1; ++first)
        acc += d[static_cast<std::size_t>(first - 1)] *
               tuple_product_sum(d, c - first, i - 1);
    return acc;
}

// For the exact geometric tail beta_l = delta^l the split-size sums collapse,
//   sum_{l >= i+1} delta^l C(l-1, i) = (delta / (1 - delta))^{i+1},
// which turns the recursion into a finite double sum.
std::vector<double> closed_form_D(double delta, int kmax) {
    double r = delta / (1.0 - delta);
    std::vector<double> d = {1.0};
    for (int k = 2; k <= kmax; ++k) {
        double acc = 0.0;
        for (int i = 1; i <= k - 1; ++i) {
            double inner = 0.0;
            for (int n = 1; n <= k - i; ++n)
                inner += d[static_cast<std::size_t>(n - 1)] *
                         tuple_product_sum(d, k - n, i);
            acc += std::pow(r, i + 1) * inner;
        }
        for (int i = 2; i <= k; ++i)
            acc += std::pow(r, i + 1) * tuple_product_sum(d, k, i);
        d.push_back(acc);
    }
    return d;
}

// Direct summation over split sizes up to a fixed generous cutoff, no
// adaptive truncation.
std::vector<double> brute_force_D(double delta, int kmax, int lmax) {
    std::vector<double> d = {1.0};
    for (int k = 2; k <= kmax; ++k) {
        double acc = 0.0;
        for (int l = 2; l <= lmax; ++l) {
            double term = 0.0;
            for (int i = 1; i <= l - 1; ++i) {
                double inner = 0.0;
                for (int n = 1; n <= k - 1; ++n)
                    inner += d[static_cast<std::size_t>(n - 1)] *
                             tuple_product_sum(d, k - n, i);
                if (i >= 2) inner += tuple_product_sum(d, k, i);
                term += binomial(l - 1, i) * inner;
            }
            acc += std::pow(delta, l) * term;
        }
        d.push_back(acc);
    }
    return d;
}

}  // namespace

TEST_SUITE_BEGIN("bounds");

TEST_CASE("prefactor for a walk-free pure-death model") {
    // p(s,0,0) = 1, so the damped return integral plus the analytic tail is
    // exactly 1 / death_rate and B = tail_coeff.
    auto model = validate(death_only_params());
    CHECK(B_constant(model) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("prefactor clamps at one") {
    ModelParams p = death_only_params();
    p.tail_coeff = 0.5;
    CHECK(B_constant(validate(p)) == 1.0);
}

TEST_CASE("prefactor matches the Laplace transform of the return probability") {
    // Both laws are simple walks, so the effective walk is a rate 1.3 simple
    // walk and int_0^inf e^{-gap s} p(s,0,0) ds = 1/sqrt(gap^2 + 2 gap 1.3).
    double laplace = 1.0 / std::sqrt(0.7 * 0.7 + 2.0 * 0.7 * 1.3);
    ModelParams p = binary_params();
    CHECK(B_constant(validate(p)) == 1.0);  // 0.658 clamps up
    p.tail_coeff = 3.0;
    CHECK(B_constant(validate(p)) == doctest::Approx(3.0 * laplace).epsilon(1e-6));
}

TEST_CASE("prefactor shrinks when the gap widens") {
    ModelParams p = binary_params();
    p.tail_coeff = 3.0;
    double slow = B_constant(validate(p));
    p.death_rate = 1.5;  // same walk, larger gap
    double fast = B_constant(validate(p));
    CHECK(fast < slow);
    CHECK(fast >= 1.0);
}

TEST_CASE("prefactor is insensitive to the quadrature horizon") {
    ModelParams p = binary_params();
    p.tail_coeff = 3.0;
    auto model = validate(p);
    double b1 = B_constant(model);
    double b2 = B_constant(model, 2.0 * 40.0 / model.gap());
    CHECK(std::fabs(b1 - b2) <= 1e-6 * b1);
}

TEST_CASE("combinatorial sequence starts at one and has the hand value") {
    auto d = D_sequence(0.5, 4);
    REQUIRE(d.size() == 4);
    CHECK(d[0] == 1.0);
    // delta = 1/2: both collapsed weights equal 1, D_2 = D_1 + D_1 D_1 = 2.
    CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-12));
    // delta = 0.3: r = 3/7, D_2 = r^2 + r^3.
    auto d3 = D_sequence(0.3, 2);
    double r = 0.3 / 0.7;
    CHECK(d3[1] == doctest::Approx(r * r + r * r * r).epsilon(1e-12));
}

TEST_CASE("combinatorial sequence matches the collapsed closed form") {
    for (double delta : {0.3, 0.5, 0.7}) {
        auto got = D_sequence(delta, 8);
        auto want = closed_form_D(delta, 8);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("combinatorial sequence matches brute-force summation") {
    for (double delta : {0.3, 0.5, 0.7}) {
        auto got = D_sequence(delta, 6);
        auto want = brute_force_D(delta, 6, 600);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("truncation threshold barely moves the values") {
    auto tight = D_sequence(0.7, 8, 1e-15);
    auto loose = D_sequence(0.7, 8, 1e-10);
    for (std::size_t i = 0; i < tight.size(); ++i)
        CHECK(std::fabs(tight[i] - loose[i]) <= 1e-8 * tight[i]);
}

TEST_CASE("sequence argument validation") {
    CHECK_THROWS_AS(D_sequence(0.0, 4), Error);
    CHECK_THROWS_AS(D_sequence(1.0, 4), Error);
    CHECK_THROWS_AS(D_sequence(0.5, 0), Error);
}

TEST_CASE("growth rate of an exact geometric sequence") {
    std::vector<double> d;
    double v = 1.0;
    for (int k = 0; k < 10; ++k, v *= 1.7) d.push_back(v);
    bool stable = false;
    CHECK(D_growth_rate(d, &stable) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(stable);
}

TEST_CASE("growth rate input validation") {
    std::vector<double> tiny = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(D_growth_rate(tiny), Error);
    std::vector<double> degenerate = {1.0, 0.5, 0.0, 0.2};
    try {
        D_growth_rate(degenerate);
        FAIL("expected DegenerateSequence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_sequence);
    }
}

TEST_CASE("growth rate flags a jittering tail") {
    std::vector<double> d = {1.0, 1.0, 2.0, 8.0, 3.0, 20.0};
    bool stable = true;
    D_growth_rate(d, &stable);
    CHECK_FALSE(stable);
}

TEST_CASE("ratios settle for geometric tails") {
    // last-third variation under 5 percent at order 12
    for (double delta : {0.3, 0.5, 0.7}) {
        auto d = D_sequence(delta, 12);
        bool stable = false;
        double rate = D_growth_rate(d, &stable);
        CHECK(rate > 0.0);
        CHECK(std::isfinite(rate));
        CHECK(stable);
    }
}

TEST_CASE("certificate assembly") {
    auto model = validate(binary_params());
    BoundCertificate cert = make_certificate(model, 4);
    CHECK(cert.D.size() == 4);
    CHECK(cert.D[0] == 1.0);
    CHECK(cert.B >= 1.0);
    CHECK(cert.growth_estimate > 0.0);
    CHECK(cert.growth_stabilized);  // probes past the requested order
}

TEST_CASE("moment bound certified on a solved table") {
    auto model = validate(binary_params());
    MomentTable table = solve_hierarchy(model, 16, 4, uniform_grid(0.025, 60));
    BoundCertificate cert = make_certificate(model, 4);
    MarginReport rep = verify_factorial_bound(table, cert, model);
    CHECK(rep.comparisons == 60LL * 4 * 16);
    CHECK(rep.min_margin >= -1e-8);
    // order 1 saturates the bound: the solved first moment IS the damped
    // propagator, so its margin is zero up to roundoff
    CHECK(std::fabs(rep.by_order[0]) <= 1e-10);
    for (int k = 2; k <= 4; ++k) CHECK(rep.by_order[static_cast<std::size_t>(k - 1)] > 0.0);
    CHECK(rep.argmin_order >= 1);
    CHECK(rep.argmin_order <= 4);
    CHECK(rep.argmin_time > 0.0);
}

TEST_CASE("split-free moments sit far inside the bound") {
    ModelParams p = binary_params();
    p.split_rates = {};
    p.offspring_law = {};
    auto model = validate(p);
    MomentTable table = solve_hierarchy(model, 8, 3, uniform_grid(0.05, 20));
    BoundCertificate cert = make_certificate(model, 3);
    MarginReport rep = verify_factorial_bound(table, cert, model);
    CHECK(std::fabs(rep.by_order[0]) <= 1e-10);
    CHECK(rep.by_order[1] == 1.0);  // orders 2 and 3 vanish identically
    CHECK(rep.by_order[2] == 1.0);
}

TEST_CASE("a forged table is rejected") {
    auto model = validate(binary_params());
    TorusGeometry geom(1, 4);
    MomentTable table{geom, 1, {0.0, 0.5}, {}};
    table.values = {{{1.0, 0.0, 0.0, 0.0}, {10.0, 0.0, 0.0, 0.0}}};
    BoundCertificate cert = make_certificate(model, 1);
    try {
        verify_factorial_bound(table, cert, model);
        FAIL("expected BoundViolated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::bound_violated);
    }
}

TEST_CASE("envelope ladder doubles from its seed") {
    BoundCertificate cert;
    cert.B = 1.0;
    cert.growth_estimate = 1.0;
    std::vector<double> times = {0.0};
    std::vector<std::vector<double>> masses = {{5.0}};
    CHECK(envelope_constant_from_masses(times, masses, cert, 0.7) == 8.0);
    masses[0][0] = 0.5;  // already under the seed
    CHECK(envelope_constant_from_masses(times, masses, cert, 0.7) == 1.0);
    masses[0] = {1.0, 2.0};  // curve length mismatch
    CHECK_THROWS_AS(envelope_constant_from_masses(times, masses, cert, 0.7), Error);
}

TEST_CASE("envelope constant controls the summed moments") {
    auto model = validate(binary_params());
    MomentTable table = solve_hierarchy(model, 16, 4, uniform_grid(0.025, 60));
    BoundCertificate cert = make_certificate(model, 4);
    double c = envelope_constant(table, cert, model);
    CHECK(c >= cert.B);
    CHECK(c >= cert.growth_estimate);
    CHECK(c >= 1.0);
    double gap = model.gap();
    for (int k = 1; k <= 4; ++k) {
        for (std::size_t i = 0; i < table.times.size(); ++i) {
            const auto& row = table.field(k, i);
            double mass = 0.0;
            for (double x : row) mass += x;
            double cap = std::pow(c, k) * factorial(k) *
                         std::exp(-gap * table.times[i]) * (1.0 + 1e-7);
            CHECK(mass <= cap);
        }
    }
}

TEST_SUITE_END();

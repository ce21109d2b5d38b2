#include <doctest.h>

#include "bifield/errors.hpp"
#include "bifield/model.hpp"

using namespace bifield;

namespace {

ModelParams base_model() {
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

}  // namespace

TEST_SUITE("model") {

TEST_CASE("gap arithmetic") {
    ModelParams p = base_model();
    p.split_rates = {};
    CHECK(compute_gap(p) == doctest::Approx(1.0));
    p.split_rates = {0.3};
    CHECK(compute_gap(p) == doctest::Approx(0.7));
    p.split_rates = {0.2, 0.2};
    CHECK(compute_gap(p) == doctest::Approx(0.4));
}

TEST_CASE("validation accepts the reference model") {
    auto m = validate(base_model());
    CHECK(m.gap() == doctest::Approx(0.7));
    CHECK(m.spread_weight() == doctest::Approx(0.3));
    CHECK(m.split_total() == doctest::Approx(0.3));
    CHECK(m.max_offspring() == 2);
    REQUIRE(m.walk().has_value());
    CHECK(m.walk()->jump_rate == doctest::Approx(1.0));
    CHECK(m.walk()->spread_rate == doctest::Approx(0.3));
}

TEST_CASE("criticality is rejected") {
    ModelParams p = base_model();
    p.death_rate = 0.5;
    p.split_rates = {0.5};
    try {
        validate(p);
        FAIL("expected NotSubcritical");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::not_subcritical);
    }
    // strictly supercritical too
    p.split_rates = {0.9};
    CHECK_THROWS_AS(validate(p), Error);
}

TEST_CASE("tail certificate is enforced") {
    ModelParams p = base_model();
    p.tail_ratio = 0.6;  // cap for l=2 is 0.36
    CHECK_NOTHROW(validate(p));
    p.tail_ratio = 0.5;  // cap drops to 0.25 < 0.3
    try {
        validate(p);
        FAIL("expected TailViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::tail_violation);
    }
}

TEST_CASE("split statistics") {
    ModelParams p = base_model();
    CHECK(total_split_rate(p) == doctest::Approx(0.3));
    CHECK(offspring_mean(p) == doctest::Approx(1.0));
    p.split_rates = {0.2, 0.2};
    CHECK(offspring_mean(p) == doctest::Approx(1.5));
    p.split_rates = {};
    try {
        offspring_mean(p);
        FAIL("expected DivisionByZeroRate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::division_by_zero_rate);
    }
}

TEST_CASE("subcritical models split slower than they die") {
    auto m = validate(base_model());
    CHECK(m.split_total() < m.params().death_rate);
}

TEST_CASE("validation is idempotent") {
    auto m1 = validate(base_model());
    auto m2 = validate(m1.params());
    CHECK(m1.gap() == m2.gap());
    CHECK(m1.spread_weight() == m2.spread_weight());
    CHECK(m1.params().jump_law.entries == m2.params().jump_law.entries);
}

TEST_CASE("step laws are revalidated in context") {
    ModelParams p = base_model();
    p.jump_law.entries = {{{ 1}, 0.6}, {{-1}, 0.4}};
    try {
        validate(p);
        FAIL("expected InvalidStepDistribution");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_step_distribution);
    }
}

TEST_CASE("degenerate motion still validates without a walk") {
    ModelParams p = base_model();
    p.jump_rate = 0.0;
    p.jump_law = {};
    p.split_rates = {};
    p.offspring_law = {};
    auto m = validate(p);
    CHECK_FALSE(m.walk().has_value());
    CHECK(m.gap() == doctest::Approx(1.0));
}

TEST_CASE("suggested list length for a geometric family") {
    // ratio 1/2: dropped tail after L is 2^-L, first below 1e-12 at L = 40.
    CHECK(suggest_max_offspring(1.0, 0.5, 1.0) == 40);
    CHECK(suggest_max_offspring(1.0, 0.5, 2.0) == 39);
}

TEST_CASE("immigration-free and motion-heavy variants validate") {
    ModelParams p = base_model();
    p.immigration_rate = 0.0;
    CHECK_NOTHROW(validate(p));
    p = base_model();
    p.jump_rate = 0.0;
    p.jump_law = {};
    CHECK_NOTHROW(validate(p));  // spread term still moves particles
}

}  // TEST_SUITE

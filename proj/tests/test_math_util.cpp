#include <doctest.h>

#include <cmath>

#include "bifield/math_util.hpp"

using namespace bifield;

TEST_SUITE("math_util") {

TEST_CASE("chi-square survival function") {
    CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
    // With two degrees of freedom the tail is exactly exp(-x/2).
    for (double x : {0.3, 1.7, 5.0, 20.0})
        CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-0.5 * x)).epsilon(1e-12));
    // Classical 5% critical point at one degree of freedom.
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(chi_square_sf(200.0, 4) < 1e-40);
}

TEST_CASE("poisson pmf") {
    CHECK(poisson_pmf(0.5, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    double total = 0.0;
    for (int k = 0; k < 80; ++k) total += poisson_pmf(3.7, k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poisson_pmf(0.0, 0) == 1.0);
    CHECK(poisson_pmf(0.0, 2) == 0.0);
}

TEST_CASE("factorials and binomials") {
    CHECK(falling_factorial(5, 3) == 60.0);
    CHECK(falling_factorial(2, 3) == 0.0);
    CHECK(falling_factorial(7, 0) == 1.0);
    CHECK(factorial(0) == 1.0);
    CHECK(factorial(6) == 720.0);
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(10, 0) == 1.0);
    CHECK(binomial(4, 5) == 0.0);
}

TEST_CASE("compositions") {
    auto c42 = compositions(4, 2);
    REQUIRE(c42.size() == 3);
    CHECK(c42[0] == std::vector<int>{1, 3});
    CHECK(c42[1] == std::vector<int>{2, 2});
    CHECK(c42[2] == std::vector<int>{3, 1});
    CHECK(compositions(3, 3) == std::vector<std::vector<int>>{{1, 1, 1}});
    CHECK(compositions(2, 3).empty());
    CHECK(compositions(6, 3).size() == 10);  // C(5,2)
}

TEST_CASE("partition multiplicity vectors") {
    auto p4 = partition_multiplicities(4);
    CHECK(p4.size() == 5);
    auto has = [&](std::vector<int> v) {
        for (const auto& q : p4)
            if (q == v) return true;
        return false;
    };
    CHECK(has({4, 0, 0, 0}));
    CHECK(has({2, 1, 0, 0}));
    CHECK(has({0, 2, 0, 0}));
    CHECK(has({1, 0, 1, 0}));
    CHECK(has({0, 0, 0, 1}));
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64(std::string("")) == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64(std::string("a")) == 0xAF63DC4C8601EC8CULL);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <random>

#include "adaptrial/allocation.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/rng.hpp"
#include "adaptrial/special.hpp"
#include "oracles.hpp"

using namespace adaptrial;
using namespace adaptrial::allocation;

TEST_SUITE("allocation") {

TEST_CASE("design vectors")
{
    CHECK(design_vector(Arm::A, 0.7) == dlm::Vector::Unit(3, 0));
    const auto b0 = design_vector(Arm::B, 0.0);
    CHECK((b0(0) == 1.0 && b0(1) == 1.0 && b0(2) == 0.0));
    const auto b = design_vector(Arm::B, 0.5);
    CHECK((b(0) == 1.0 && b(1) == 1.0 && b(2) == 0.5));
}

TEST_CASE("normal cdf values")
{
    CHECK(special::std_normal_cdf(0.0) == 0.5);
    CHECK(special::std_normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    for (double z = -6.0; z <= 6.0; z += 0.125) {
        CHECK(std::fabs(special::std_normal_cdf(z) - oracle::normal_cdf_series(z)) <= 1e-10);
    }
    const double lo = special::std_normal_cdf(-8.0);
    CHECK(lo == doctest::Approx(6.22e-16).epsilon(0.01));
    CHECK(lo == doctest::Approx(oracle::normal_lower_tail_asymptotic(8.0)).epsilon(1e-6));
    for (double z = 9.0; z <= 37.0; z += 1.0) {
        const double v = special::std_normal_cdf(-z);
        CHECK(v > 0.0);
        CHECK(v == doctest::Approx(oracle::normal_lower_tail_asymptotic(z)).epsilon(1e-8));
    }
}

TEST_CASE("normal quantile round trip")
{
    for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.975, 1 - 1e-9}) {
        CHECK(special::std_normal_cdf(special::std_normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK_THROWS_AS(special::std_normal_quantile(0.0), ArgumentError);
    CHECK_THROWS_AS(special::std_normal_quantile(1.0), ArgumentError);
}

TEST_CASE("sqrt ratio weight examples")
{
    CHECK(weight_sqrt_ratio({10, 10, 1, 1}).wA == 0.5);
    const auto w = weight_sqrt_ratio({4, 9, 1, 1});
    CHECK(w.wA == doctest::Approx(0.6));
    CHECK(w.wB == doctest::Approx(0.4));
    CHECK(w.rule == Rule::SqrtRatio);
    for (double q : {0.01, 1.0, 50.0}) {
        CHECK(weight_sqrt_ratio({-1, 9, q, 2 * q}).wA == 0.5);
        CHECK(weight_sqrt_ratio({3, 0, q, q}).wA == 0.5);
    }
    // fA < fB but the ratio is below 1: falls to the otherwise branch
    CHECK(weight_sqrt_ratio({4, 9, 1, 2}).wA == 0.5);
}

TEST_CASE("normal cdf weight examples")
{
    CHECK(weight_normal_cdf({3, 3, 1, 2}).wA == 0.5);
    const auto w = weight_normal_cdf({4, 9, 1, 1});
    CHECK(w.wA == doctest::Approx(oracle::normal_cdf_series(5 / std::sqrt(2.0))).epsilon(1e-12));
    CHECK(w.wA == doctest::Approx(0.999797).epsilon(1e-6));
    CHECK(weight_normal_cdf({1e6, 0, 1, 1}).wA == 0.0);
    CHECK(weight_normal_cdf({0, 1e6, 1, 1}).wA == 1.0);
}

TEST_CASE("weight properties on random inputs")
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> loc(-50, 50);
    std::uniform_real_distribution<double> logq(-12, 12);
    for (int i = 0; i < 20000; ++i) {
        const ArmForecasts af{loc(gen), loc(gen), std::exp(logq(gen)), std::exp(logq(gen))};
        const ArmForecasts sw{af.fB, af.fA, af.QB, af.QA};
        for (Rule rule : {Rule::SqrtRatio, Rule::NormalCdf}) {
            const auto w = compute_weight(rule, af);
            REQUIRE(w.wA >= 0.0);
            REQUIRE(w.wA <= 1.0);
            REQUIRE(std::fabs(w.wA + w.wB - 1.0) <= 2.3e-16);
            const auto ws = compute_weight(rule, sw);
            REQUIRE(ws.wA == w.wB);
            REQUIRE(ws.wB == w.wA);
        }
        // monotone in each forecast mean
        const double d = std::fabs(loc(gen)) * 0.1;
        const auto base = weight_normal_cdf(af);
        REQUIRE(weight_normal_cdf({af.fA, af.fB + d, af.QA, af.QB}).wA >= base.wA);
        REQUIRE(weight_normal_cdf({af.fA + d, af.fB, af.QA, af.QB}).wA <= base.wA);
    }
}

TEST_CASE("sd and var scales")
{
    const dlm::Forecast a{1.0, 4.0}, b{2.0, 9.0};
    const auto sd = arm_forecasts(a, b, QScale::Sd);
    CHECK((sd.QA == 2.0 && sd.QB == 3.0 && sd.fA == 1.0 && sd.fB == 2.0));
    const auto var = arm_forecasts(a, b, QScale::Var);
    CHECK((var.QA == 4.0 && var.QB == 9.0));
}

TEST_CASE("assign threshold")
{
    AllocationWeight one{1.0, 0.0, Rule::NormalCdf}, zero{0.0, 1.0, Rule::NormalCdf};
    for (double u : {0.0, 0.3, 0.999999}) {
        CHECK(assign(one, u) == Arm::A);
        CHECK(assign(zero, u) == Arm::B);
    }
    AllocationWeight w{0.6, 0.4, Rule::NormalCdf};
    CHECK(assign(w, 0.59) == Arm::A);
    CHECK(assign(w, 0.61) == Arm::B);
    CHECK(assign(w, 0.6) == Arm::B);
    CHECK_THROWS_AS(assign(w, 1.0), ArgumentError);
    CHECK_THROWS_AS(assign(w, -0.1), ArgumentError);
    CHECK_THROWS_AS(assign(w, std::nan("")), ArgumentError);
}

TEST_CASE("empirical assignment frequency")
{
    rng::CounterStream s(rng::derive_key(99, 0));
    for (double p : {0.05, 0.37, 0.5, 0.91}) {
        const AllocationWeight w{p, 1 - p, Rule::NormalCdf};
        const int n = 1000000;
        int a = 0;
        for (int i = 0; i < n; ++i) a += assign(w, s.uniform()) == Arm::A;
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::fabs(static_cast<double>(a) / n - p) <= 3 * se);
    }
}

TEST_CASE("names round trip")
{
    CHECK(parse_rule(to_string(Rule::SqrtRatio)) == Rule::SqrtRatio);
    CHECK(parse_rule("normal_cdf") == Rule::NormalCdf);
    CHECK(parse_q_scale("var") == QScale::Var);
    CHECK(parse_arm("B") == Arm::B);
    CHECK_THROWS_AS(parse_rule("phi"), ConfigError);
}

}

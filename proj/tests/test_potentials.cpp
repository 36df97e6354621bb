#include <doctest.h>

#include <kdvist/potential.hpp>
#include <kdvist/potential_io.hpp>

#include <cmath>
#include <random>

using namespace kdvist;

TEST_CASE("evaluate on builtin kinds") {
    CHECK(Potential::zero()(3.7L) == 0);
    CHECK(std::abs(Potential::soliton(1, 0)(0) + 2) < 1e-15L);
    CHECK(Potential::pure_step(1)(-5) == -1);
    CHECK(Potential::pure_step(1)(5) == 0);
    CHECK(Potential::box(-0.5L, 0, 2)(1) == -0.5L);
    CHECK(Potential::box(-0.5L, 0, 2)(2) == 0);
}

TEST_CASE("truncation is a hard cut") {
    const Potential q = Potential::pure_step(1).truncate(-10);
    CHECK(q(-20) == 0);
    CHECK(q(-5) == -1);
    CHECK(q(-10) == -1);
    CHECK(std::nextafter(Real(-10), Real(-11)) < -10);
    CHECK(q(std::nextafter(Real(-10), Real(-11))) == 0);
    const Potential z = Potential::zero().truncate(-3);
    for (Real x = -10; x <= 10; x += 0.25L) CHECK(z(x) == 0);
}

TEST_CASE("truncating twice keeps the larger cut") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ub(-30, 2), ux(-40, 10);
    const std::vector<Potential> qs{Potential::soliton(1, 0.5L), Potential::n_soliton({{2, 0}, {1, 1}}),
                                    Potential::pure_step(1.5L), Potential::box(-1, -1, 1)};
    for (const auto& q : qs)
        for (int trial = 0; trial < 20; ++trial) {
            const Real b1 = ub(rng), b2 = ub(rng);
            const Potential a = q.truncate(b1).truncate(b2), b = q.truncate(std::max(b1, b2));
            for (int i = 0; i < 20; ++i) {
                const Real x = ux(rng);
                CHECK(a(x) == b(x));
            }
        }
}

TEST_CASE("one-term n_soliton is the soliton") {
    const Potential a = Potential::n_soliton({{1.3L, 0.7L}}), b = Potential::soliton(1.3L, 0.7L);
    for (Real x = -15; x <= 15; x += 0.37L) CHECK(std::abs(a(x) - b(x)) <= 1e-14L * (1 + std::abs(b(x))));
}

TEST_CASE("n_soliton profile is bounded below by -2 sum kappa^2") {
    const Potential q = Potential::n_soliton({{2, 0}, {1, 0}});
    Real lowest = 0;
    for (Real x = -10; x <= 10; x += 0.01L) lowest = std::min(lowest, q(x));
    CHECK(lowest >= -10 - 1e-12L);
    CHECK(lowest < -2);
}

TEST_CASE("evaluate is deterministic") {
    const Potential q = Potential::sum({Potential::soliton(1, 0), Potential::box(-0.25L, -3, 0)});
    for (Real x = -5; x <= 5; x += 0.5L) CHECK(q(x) == q(x));
    CHECK(q.fingerprint() == Potential::sum({Potential::soliton(1, 0), Potential::box(-0.25L, -3, 0)}).fingerprint());
    CHECK(q.fingerprint() != Potential::soliton(1, 0).fingerprint());
}

TEST_CASE("hypothesis validation") {
    const auto s = validate_hypothesis(Potential::soliton(1, 0));
    CHECK(s.pass);
    const auto p = validate_hypothesis(Potential::pure_step(1));
    CHECK(p.pass);
    CHECK(std::abs(p.h_observed - 1) < 1e-12L);
    CHECK(p.tail_zero);

    // q(x) = x on the left: the power tail keeps growing without bound.
    std::vector<Real> xs, qs;
    for (int i = 0; i <= 200; ++i) {
        const Real x = -50 + 0.25L * i;
        xs.push_back(x);
        qs.push_back(x < 0 ? x : 0);
    }
    const Potential lin = Potential::tabulated(xs, qs, {TailRule::power, -1}, {TailRule::zero, 0});
    const auto r = validate_hypothesis(lin);
    CHECK_FALSE(r.pass);
    CHECK_FALSE(r.bounded_below);
}

TEST_CASE("tabulated data never extrapolates silently") {
    const Potential q = Potential::tabulated({0, 1, 2, 3}, {0, -1, 0, 0}, {}, {});
    CHECK_THROWS_AS(q(-1), ConfigError);
    CHECK_THROWS_AS(q(4), ConfigError);
    CHECK(q(1) == -1);
    const Potential z = Potential::tabulated({0, 1, 2, 3}, {-1, -1, 0, 0}, {TailRule::constant, 0}, {TailRule::zero, 0});
    CHECK(z(-10) == -1);
    CHECK(z(10) == 0);
    // Monotone data stays monotone between samples.
    const Potential m = Potential::tabulated({0, 1, 2, 3}, {0, 0, -1, -1}, {TailRule::zero, 0}, {TailRule::constant, 0});
    for (Real x = 0; x < 3; x += 0.01L) CHECK(m(x + 0.01L) <= m(x) + 1e-15L);
}

TEST_CASE("json configuration") {
    const Potential q = potential_from_json(R"({"kind": "sum", "terms": [
        {"kind": "soliton", "kappa": 1, "x0": 0},
        {"kind": "truncated", "b": -4, "inner": {"kind": "pure_step", "h": 0.5}}]})");
    CHECK(std::abs(q(-1) - Potential::soliton(1, 0)(-1) + 0.25L) < 1e-15L);
    CHECK(q(0) == Potential::soliton(1, 0)(0));
    CHECK(std::abs(q(-6) - Potential::soliton(1, 0)(-6)) < 1e-15L);
    CHECK(potential_from_json(R"({"potential": {"kind": "box", "depth": -1, "left": 0, "right": 1}})")(0.5L) == -1);
    CHECK_THROWS_AS(potential_from_json(R"({"kind": "nope"})"), ConfigError);
    CHECK_THROWS_AS(potential_from_json("{not json"), ConfigError);
    CHECK_THROWS_AS(potential_from_json(R"({"kind": "soliton", "kappa": -1, "x0": 0})"), ConfigError);
}

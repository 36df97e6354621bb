#include <doctest.h>

#include <kdvist/oracles.hpp>
#include <kdvist/solver.hpp>

#include <cmath>
#include <random>

using namespace kdvist;

namespace {

Real soliton_u(Real x, Real t) {
    const Real c = std::cosh(x - 4 * t);
    return -2 / (c * c);
}

std::vector<Real> range(Real lo, Real hi, Real step) {
    std::vector<Real> v;
    const long n = std::lround((hi - lo) / step);
    for (long i = 0; i <= n; ++i) v.push_back(lo + i * step);
    return v;
}

SolveOptions contour() {
    SolveOptions o;
    o.symbol.path = KernelPath::contour;
    return o;
}

}  // namespace

TEST_CASE("zero data stays zero") {
    CHECK(solve_point(Potential::zero(), 1.3L, 0.7L).u == 0);
    const auto f = solve_grid(Potential::zero(), range(-5, 5, 1), {0.5L, 1});
    for (const auto& row : f.u)
        for (Real v : row) CHECK(v == 0);
}

TEST_CASE("one soliton") {
    const Potential q = Potential::soliton(1, 0);
    CHECK(std::abs(solve_point(q, 0, 0.25L).u + 2 / std::pow(std::cosh(Real(1)), 2)) < 1e-10L);
    CHECK(std::abs(solve_point(q, 0, 0.25L).u + 0.83995L) < 1e-5L);
    CHECK(std::abs(solve_point(q, 2, 0.5L).u + 2) < 1e-10L);

    const auto f = solve_grid(q, range(-10, 10, 0.1L), {0.5L, 1});
    Real err = 0;
    for (const auto& p : f.points) {
        err = std::max(err, std::abs(p.u - soliton_u(p.x, p.t)));
        CHECK(p.diag.det > 0);
        CHECK(p.diag.min_eig > -1);
        CHECK(p.diag.path == "discrete");
    }
    CHECK(err <= 1e-8L);
}

TEST_CASE("soliton far from the peak needs extended precision") {
    Solver s(Potential::soliton(1, 0));
    const PointResult p = s.point(-30, 1);
    CHECK(p.diag.precision != "long double");
    CHECK(std::abs(p.u - soliton_u(-30, 1)) < 1e-12L);
    CHECK(std::abs(s.point(-12, 1).u - soliton_u(-12, 1)) < 1e-12L);
}

TEST_CASE("spectrum stays meaningful when pole terms are huge") {
    // Pure soliton data gives a positive semidefinite operator.
    Solver s(Potential::n_soliton({{2, 0}, {1, 0}}));
    for (Real x : {-15.0L, -12.0L, -8.0L}) {
        const PointResult p = s.point(x, 1);
        CHECK(p.diag.precision != "long double");
        CHECK(p.diag.min_eig > -1e-6L);
        CHECK(p.diag.margin_ok);
    }
}

TEST_CASE("negative time on the discrete path") {
    Solver s(Potential::soliton(1, 0));
    for (Real x : {-6.0L, -4.0L, 0.0L}) CHECK(std::abs(s.point(x, -1).u - soliton_u(x, -1)) < 1e-10L);
    Solver step(Potential::pure_step(1));
    CHECK_THROWS_AS(step.point(0, -1), ConfigError);
    CHECK_THROWS_AS(step.point(0, 0), Error);
}

TEST_CASE("traveling wave") {
    for (const auto& o : {SolveOptions{}, contour()}) {
        Solver s(Potential::soliton(1, 0), o);
        for (Real x : {-1.0L, 0.5L, 3.0L}) {
            const Real d = 0.25L;
            CHECK(std::abs(s.point(x, 1).u - s.point(x - 4 * d, 1 - d).u) < 1e-7L);
        }
    }
}

TEST_CASE("translation covariance") {
    Solver a(Potential::box(-0.5L, 0, 2)), b(Potential::box(-0.5L, 1, 3));
    for (Real x : {-2.0L, 0.0L, 1.5L}) CHECK(std::abs(a.point(x, 0.5L).u - b.point(x + 1, 0.5L).u) < 1e-7L);
    Solver c(Potential::soliton(1, 0)), d(Potential::soliton(1, -1.5L));
    for (Real x : {-2.0L, 0.0L, 1.5L}) CHECK(std::abs(c.point(x, 0.5L).u - d.point(x - 1.5L, 0.5L).u) < 1e-7L);
}

TEST_CASE("pure step field") {
    Solver s(Potential::pure_step(1));
    const auto f = solve_grid(s, range(8, 20, 2), {1});
    Real prev = 1e300L;
    for (const auto& p : f.points) {
        CHECK(std::abs(p.u) < prev);
        prev = std::abs(p.u);
        CHECK(p.diag.det > 0);
        CHECK(p.diag.min_eig > -1 + 1e-3L);
        CHECK(p.diag.det_change <= 1e-8L);
    }
    CHECK(prev < 1e-4L);
    // Trace formula against differences of log det.
    const Real h = 0.005L;
    for (Real x : {-1.3L, 0.4L}) {
        auto L = [&](Real y) { return s.log_det(y, 1); };
        const Real fd = (-L(x + 2 * h) + 16 * L(x + h) - 30 * L(x) + 16 * L(x - h) - L(x - 2 * h)) / (12 * h * h);
        CHECK(std::abs(s.point(x, 1).u + 2 * fd) < 1e-6L);
    }
}

TEST_CASE("grid output does not depend on the worker count") {
    SolveOptions one, three;
    one.workers = 1;
    three.workers = 3;
    const auto xs = range(-3, 3, 0.5L);
    const auto a = solve_grid(Potential::pure_step(1), xs, {0.5L, 1}, one);
    const auto b = solve_grid(Potential::pure_step(1), xs, {0.5L, 1}, three);
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].u == b.points[i].u);
}

TEST_CASE("truncation sweeps") {
    const auto box = truncation_sweep(Potential::box(-0.5L, 0, 2), {-2, -4, -8}, 0.5L, 0.5L);
    for (std::size_t i = 1; i < box.rows.size(); ++i) CHECK(box.rows[i].diff < 1e-10L);

    const auto step = truncation_sweep(Potential::pure_step(1), {-10, -20, -40}, 0, 1);
    REQUIRE(step.rows.size() == 3);
    CHECK(step.rows[2].diff < step.rows[1].diff);
    CHECK(step.monotone);

    // The cut at -5 drops a 4e-4 jump whose radiation still reaches x = 0
    // at the 2e-7 level (its bound state moves by only 1e-10 in u); from -10 on
    // the sweep is flat.
    const auto sol = truncation_sweep(Potential::soliton(1, 0), {-5, -10, -20}, 0, 1);
    CHECK(sol.rows[1].diff < 1e-6L);
    CHECK(sol.rows[2].diff < 1e-8L);

    CHECK_THROWS_AS(truncation_sweep(Potential::pure_step(1), {-10, -5, -20}, 0, 1), ConfigError);
}

TEST_CASE("KdV residual") {
    SolutionField z;
    z.xs = range(0, 0.06L, 0.01L);
    z.ts = {0.999L, 1, 1.001L};
    z.u.assign(3, std::vector<Real>(7, 0));
    CHECK(kdv_residual(z).max_residual == 0);

    SolutionField s = z;
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 7; ++i) s.u[j][i] = soliton_u(s.xs[i] + 4, s.ts[j]);
    CHECK(kdv_residual(s).relative_to_u <= 1e-4L);

    SolutionField coarse = s;
    coarse.xs = range(-2.5L, 3.5L, 1);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 7; ++i) coarse.u[j][i] = soliton_u(coarse.xs[i] + 4, coarse.ts[j]);
    CHECK_THROWS_AS(kdv_residual(coarse), ConfigError);
}

TEST_CASE("re-scattering the evolved soliton") {
    const Real t = 0.1L;
    std::vector<Real> ks;
    for (int i = -30; i <= 30; ++i) ks.push_back(Real(0.1L) * i);
    const auto r = rescatter_check(Potential::soliton(1, 0), t, ks);
    REQUIRE(r.recovered.size() == 1);
    CHECK(std::abs(r.recovered[0].kappa - 1) < 1e-6L);
    CHECK(std::abs(r.recovered[0].c - 2 * std::exp(0.8L)) < 1e-4L);
    CHECK(r.max_reflection_mismatch < 1e-3L);

    const auto z = rescatter_check(Potential::zero(), t, ks);
    CHECK(z.max_reflection_mismatch == 0);
    CHECK(z.recovered.empty());
    CHECK_THROWS_AS(rescatter_check(Potential::pure_step(1), t, ks), ConfigError);
}

#include <doctest.h>

#include <kdvist/oracles.hpp>
#include <kdvist/solver.hpp>

#include <cmath>
#include <random>

using namespace kdvist;
using oracles::SolitonData;

namespace {

// Trough of the analytic field near x0 by golden-section search.
Real trough(const SolitonData& d, Real x0, Real t, Real half) {
    const Real g = (std::sqrt(Real(5)) - 1) / 2;
    Real lo = x0 - half, hi = x0 + half;
    for (int i = 0; i < 120; ++i) {
        const Real a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (oracles::n_soliton_field(d, a, t) < oracles::n_soliton_field(d, b, t))
            hi = b;
        else
            lo = a;
    }
    return (lo + hi) / 2;
}

}  // namespace

TEST_CASE("rank-one determinant and field") {
    const SolitonData none{};
    CHECK(oracles::n_soliton_det(none, 0.4L, 0.2L) == 1);
    const SolitonData one{{1}, {2}};
    CHECK(std::abs(oracles::n_soliton_det(one, 0, 0) - 2) < 1e-15L);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ux(-20, 20), ut(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const Real x = ux(rng), t = ut(rng);
        const Real c = std::cosh(x - 4 * t);
        CHECK(std::abs(oracles::n_soliton_field(one, x, t) + 2 / (c * c)) < 1e-15L);
    }
}

TEST_CASE("norming constants from positions") {
    const auto d = SolitonData::from_positions({{1, 0}});
    CHECK(std::abs(d.c[0] - 2) < 1e-15L);
    const auto two = SolitonData::from_positions({{1, 0}, {2, 0}});
    CHECK(two.kappa[0] == 2);
    CHECK(two.kappa[1] == 1);
}

TEST_CASE("two-soliton determinant stays positive") {
    const auto d = SolitonData::from_positions({{2, 0}, {1, 0}});
    for (Real x = -10; x <= 10; x += 0.25L)
        for (Real t = 0; t <= 1; t += 0.05L) CHECK(oracles::n_soliton_det(d, x, t) > 0);
}

TEST_CASE("phase shifts from the analytic field") {
    const auto d = SolitonData::from_positions({{2, 0}, {1, 0}});
    const Real T = 20;
    for (std::size_t n = 0; n < 2; ++n) {
        const Real k = d.kappa[n];
        const Real base = std::log(d.c[n] / (2 * k)) / (2 * k);
        const Real shift = oracles::soliton_phase_shift(d, n);
        const Real before = trough(d, base - 4 * k * k * T - shift / 2, -T, 1.5L);
        const Real after = trough(d, base + 4 * k * k * T + shift / 2, T, 1.5L);
        CHECK(std::abs(after - before - 8 * k * k * T - shift) < 1e-3L);
    }
    // Classical values: the faster soliton jumps ahead, the slower falls back.
    const Real l = std::log(Real(3));
    CHECK(std::abs(oracles::soliton_phase_shift(d, 0) - l / 2) < 1e-15L);
    CHECK(std::abs(oracles::soliton_phase_shift(d, 1) + l) < 1e-15L);
}

TEST_CASE("analytic two-soliton solves KdV") {
    const auto d = SolitonData::from_positions({{2, 0}, {1, 0}});
    const Real dx = 1e-3L, dt = 1e-6L;
    for (Real x0 : {-1.0L, 0.0L, 0.7L})
        for (Real t0 : {-0.1L, 0.0L, 0.2L}) {
            SolutionField f;
            for (int i = -3; i <= 3; ++i) f.xs.push_back(x0 + i * dx);
            f.ts = {t0 - dt, t0, t0 + dt};
            for (Real t : f.ts) {
                std::vector<Real> row;
                for (Real x : f.xs) row.push_back(oracles::n_soliton_field(d, x, t));
                f.u.push_back(row);
            }
            const auto r = kdv_residual(f);
            CHECK(r.max_residual <= 1e-6L * std::max<Real>(1, r.max_u));
        }
}

TEST_CASE("pure step closed forms") {
    for (Real h : {0.5L, 1.0L, 2.0L}) CHECK(oracles::pure_step_reflection(h, 0) == -1);
    CHECK(std::abs(oracles::pure_step_reflection(1, 10) + 1 / std::pow(10 + std::sqrt(Real(101)), 2)) < 1e-18L);
    CHECK(std::abs(oracles::pure_step_reflection(1, 10) + 2.4876e-3L) < 1e-7L);
    for (Real k = 0.05L; k < 20; k += 0.37L) {
        const Real r = oracles::pure_step_reflection(1, k);
        CHECK(r == oracles::pure_step_reflection(1, -k));
        CHECK(r >= -1);
        CHECK(r < 0);
    }
    CHECK(std::abs(oracles::pure_step_rho(1, 1) - 1 / (3 * kPi)) < 1e-18L);
    CHECK(std::abs(oracles::pure_step_rho(1, 1) - 0.106103L) < 1e-6L);
    const auto both = oracles::pure_step_closed_forms(1, 1);
    CHECK(both.rho == oracles::pure_step_rho(1, 1));
    CHECK(both.R == oracles::pure_step_reflection(1, 1));
}

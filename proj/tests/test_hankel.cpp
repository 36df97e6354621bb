#include <doctest.h>

#include <kdvist/hankel.hpp>
#include <kdvist/oracles.hpp>
#include <kdvist/potential.hpp>
#include <kdvist/solver.hpp>

#include <cmath>
#include <random>

using namespace kdvist;

namespace {

KernelFamily family(const Potential& q) { return cached_kernel(q, SymbolOptions{}); }

Real integrate(const QuadratureHalfLine& q, auto f) {
    Real s = 0;
    for (int i = 0; i < q.n; ++i) s += q.w[i] * f(q.s[i]);
    return s;
}

}  // namespace

TEST_CASE("half-line quadrature") {
    const auto q = build_quadrature(40, 12, 1);
    CHECK(q.n == 40);
    for (int i = 0; i < q.n; ++i) {
        CHECK(q.s[i] > 0);
        CHECK(q.w[i] > 0);
        if (i) CHECK(q.s[i] > q.s[i - 1]);
    }
    CHECK(std::abs(integrate(q, [](Real s) { return std::exp(-2 * s); }) - 0.5L) < 1e-12L);
    CHECK(std::abs(integrate(q, [](Real s) { return s * std::exp(-2 * s); }) - 0.25L) < 1e-10L);
    CHECK(std::abs(integrate(q, [](Real s) { return std::exp(-4 * s); }) - 0.25L) < 1e-10L);
    CHECK_THROWS_AS(build_quadrature(0, 12, 1), ConfigError);
    CHECK_THROWS_AS(build_quadrature(40, 12, -1), ConfigError);
}

TEST_CASE("zero operator") {
    const auto quad = build_quadrature(20, 12, 1);
    const auto op = discretize(KernelFamily(), 0.3L, 0.5L, quad);
    CHECK(op.M.cwiseAbs().maxCoeff() == 0);
    CHECK(fredholm_det(op) == 1);
    CHECK(log_det_dx2(op) == 0);
    for (Real e : spectrum_diagnostics(op).eigenvalues) CHECK(e == 0);
}

TEST_CASE("rank-one soliton operator") {
    const KernelFamily f = family(Potential::soliton(1, 0));
    const auto quad = build_quadrature(40, 12, f.h0());
    const auto op = discretize(f, 0, 0, quad);
    for (int i = 0; i < quad.n; i += 7)
        for (int j = 0; j < quad.n; j += 5) {
            const Real e = std::sqrt(quad.w[i] * quad.w[j]) * 4 * std::exp(-2 * (quad.s[i] + quad.s[j]));
            CHECK(std::abs(op.M(i, j) - e) < 1e-12L);
        }
    CHECK(std::abs(op.M.trace() - 1) < 1e-8L);
    CHECK(std::abs(fredholm_det(op) - 2) < 1e-10L);
    CHECK(std::abs(log_det_dx2(op) - 1) < 1e-9L);
    const auto sd = spectrum_diagnostics(op);
    CHECK(std::abs(sd.eigenvalues.back() - 1) < 1e-8L);
    CHECK(std::abs(sd.eigenvalues[sd.eigenvalues.size() - 2]) < 1e-12L);
    CHECK(sd.min_eig > -1e-12L);

    const auto op1 = discretize(f, 1, 0, quad);
    CHECK(std::abs(fredholm_det(op1) - (1 + std::exp(Real(-2)))) < 1e-10L);
    CHECK(std::abs(fredholm_det(op1) - 1.13534L) < 1e-5L);
}

TEST_CASE("separable kernels reduce to the Cauchy determinant") {
    const auto data = oracles::SolitonData::from_positions({{2, 0}, {1, 0}});
    const KernelFamily f = KernelFamily::from_solitons(data);
    const auto quad = build_quadrature(24, 12 / f.h0(), f.h0());
    for (Real x : {-1.0L, 0.0L, 1.0L, 3.0L})
        for (Real t : {0.0L, 0.1L}) {
            const Real ref = oracles::n_soliton_det(data, x, t);
            CHECK(std::abs(fredholm_det(discretize(f, x, t, quad)) / ref - 1) < 1e-9L);
        }
}

TEST_CASE("trace formula against finite differences") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ux(-2, 2), ut(0.5, 1);
    for (const auto& q : {Potential::soliton(1, 0), Potential::pure_step(1)}) {
        const KernelFamily f = family(q);
        const auto quad = build_quadrature(f.path() == KernelPath::contour ? 80 : 24, 12 / f.h0(), f.h0());
        for (int i = 0; i < 4; ++i) {
            const Real x = ux(rng), t = ut(rng), h = 5e-3L;
            auto L = [&](Real y) { return log_fredholm_det(discretize(f, y, t, quad, 0)); };
            const Real fd = (-L(x + 2 * h) + 16 * L(x + h) - 30 * L(x) + 16 * L(x - h) - L(x - 2 * h)) / (12 * h * h);
            CHECK(std::abs(log_det_dx2(discretize(f, x, t, quad)) - fd) < 1e-7L);
        }
    }
}

TEST_CASE("step operator: symmetry, spectrum and quadrature convergence") {
    const KernelFamily f = family(Potential::pure_step(1));
    const Real smax = 12 / f.h0();
    const auto q80 = build_quadrature(80, smax, f.h0()), q160 = build_quadrature(160, smax, f.h0());
    const auto op = discretize(f, 0, 0.5L, q80);
    CHECK(op.asymmetry <= 1e-12L);
    const auto sd = spectrum_diagnostics(op);
    CHECK(sd.min_eig > -1 + 1e-3L);
    CHECK(std::abs(log_fredholm_det(op) - log_fredholm_det(discretize(f, 0, 0.5L, q160))) <= 1e-8L);

    // Rapid singular value decay of the smooth symbol.
    const auto op1 = discretize(f, 0, 1, q80);
    const auto sv = spectrum_diagnostics(op1).singular_values;
    CHECK(sv[60] < 1e-12L * sv[0]);
    CHECK(sv[8] / sv[4] < sv[4] / sv[2]);
    CHECK(sv[4] / sv[2] < 1e-2L);
}

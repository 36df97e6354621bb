#include <doctest.h>

#include <kdvist/oracles.hpp>
#include <kdvist/potential.hpp>
#include <kdvist/solver.hpp>
#include <kdvist/symbol.hpp>

#include <cmath>
#include <random>

using namespace kdvist;

namespace {

const Complex I(0, 1);

KernelFamily family(const Potential& q, KernelPath path = KernelPath::automatic, Real h0 = NAN) {
    SymbolOptions o;
    o.path = path;
    o.h0 = h0;
    return cached_kernel(q, o);
}

Real rel(Real a, Real b) { return std::abs(a - b) / std::max<Real>(1, std::abs(b)); }

}  // namespace

TEST_CASE("cubic exponential") {
    for (Complex k : {Complex(0.3L, 0), Complex(-2, 1), Complex(5, 0.5L)}) CHECK(std::abs(xi(0, 0, k) - Real(1)) < 1e-15L);
    for (Real s : {0.5L, 1.0L, 2.0L}) {
        const Complex v = xi(0.7L, 0.3L, Complex(0, s));
        CHECK(std::abs(v.imag()) < 1e-15L * std::abs(v));
        CHECK(std::abs(v.real() / std::exp(8 * s * s * s * 0.3L - 2 * s * 0.7L) - 1) < 1e-15L);
    }
    CHECK(std::abs(xi(1, 0, Complex(kPi, 0)) - Real(1)) < 1e-15L);
}

TEST_CASE("zero potential gives the zero kernel") {
    const SymbolSplit z{family(Potential::zero())};
    for (Real k : {-3.0L, 0.5L, 2.0L}) CHECK(std::abs(assemble_symbol(z, 0.4L, 0.5L, k)) == 0);
    for (int d = 0; d <= 3; ++d) CHECK(marchenko_kernel(z, 0.4L, 0.5L, 1, d) == 0);
    CHECK(marchenko_kernel(z, 0.4L, 0.5L, 1, 0, 1) == 0);
}

TEST_CASE("one-soliton symbol and kernel on the discrete path") {
    const SymbolSplit s{family(Potential::soliton(1, 0))};
    REQUIRE(s.family.path() == KernelPath::discrete);
    for (Real x : {-1.0L, 0.0L, 2.0L})
        for (Real t : {0.0L, 0.5L})
            for (Real k : {-2.0L, 0.3L, 4.0L}) {
                const Complex expect = 2 * std::exp(8 * t - 2 * x) / (Real(1) + I * k);
                CHECK(std::abs(assemble_symbol(s, x, t, k) - expect) < 1e-9L * std::abs(expect));
            }
    CHECK(std::abs(marchenko_kernel(s, 0, 0, 1) - 4 * std::exp(Real(-2))) < 1e-9L);
    CHECK(std::abs(marchenko_kernel(s, 0, 0, 1) - 0.54134L) < 1e-5L);
    CHECK(std::abs(marchenko_kernel(s, 0, 0, 1, 1) + 8 * std::exp(Real(-2))) < 1e-9L);
    CHECK(std::abs(marchenko_kernel(s, 0, 0, 1, 1) + 1.08268L) < 1e-5L);
}

TEST_CASE("full pipeline reproduces the discrete kernel") {
    // Bound state taken by residue (contour below kappa) or carried by the
    // contour integral itself (contour just above kappa).
    const oracles::SolitonData d{{1}, {2}};
    for (Real h0 : {Real(NAN), 0.75L, 1.025L}) {
        const KernelFamily f = family(Potential::soliton(1, 0), KernelPath::contour, h0);
        REQUIRE(f.path() == KernelPath::contour);
        for (Real x : {-2.0L, 0.0L, 1.5L})
            for (Real t : {0.5L, 1.0L})
                for (Real s : {0.2L, 1.0L, 3.0L}) {
                    const Real expect = 2 * d.c[0] * std::exp(8 * t - 2 * x) * std::exp(-2 * s);
                    CHECK(std::abs(f.value(x, t, s) - expect) < 1e-5L * std::max<Real>(1, expect));
                }
    }
}

TEST_CASE("kernel derivatives match finite differences") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(-3, 3), ut(0.5, 1.0), us(0.05, 3);
    const std::vector<KernelFamily> fams{family(Potential::soliton(1, 0)),
                                         family(Potential::soliton(1, 0), KernelPath::contour),
                                         family(Potential::pure_step(1)), family(Potential::box(-0.5L, 0, 2))};
    const Real h = 1e-3L;
    // Fourth-order central differences.
    auto diff = [&](auto g, Real y) { return (g(y - 2 * h) - 8 * g(y - h) + 8 * g(y + h) - g(y + 2 * h)) / (12 * h); };
    for (const auto& f : fams)
        for (int i = 0; i < 6; ++i) {
            const Real x = ux(rng), t = ut(rng), s = us(rng);
            for (int d = 1; d <= 3; ++d) {
                const Real fd = diff([&](Real y) { return f.value(y, t, s, d - 1); }, x);
                CHECK(rel(f.value(x, t, s, d), fd) < 1e-6L);
            }
            const Real fdt = diff([&](Real y) { return f.value(x, y, s); }, t);
            CHECK(rel(f.value(x, t, s, 0, 1), fdt) < 1e-6L);
        }
}

TEST_CASE("kernel does not depend on the contour height") {
    // Small t keeps the cancellation e^{8 h0^3 t} within long double range.
    const KernelFamily a = family(Potential::pure_step(1), KernelPath::contour, 2);
    const KernelFamily b = family(Potential::pure_step(1), KernelPath::contour, 3);
    for (Real x : {-1.0L, 0.0L, 1.0L})
        for (Real s : {0.1L, 0.5L, 2.0L}) CHECK(rel(a.value(x, 0.1L, s), b.value(x, 0.1L, s)) < 1e-7L);
}

TEST_CASE("kernel accumulator is real") {
    for (const auto& q : {Potential::pure_step(1), Potential::box(-0.5L, 0, 2)}) {
        const KernelFamily f = family(q);
        for (Real x : {-2.0L, 0.5L, 3.0L})
            for (Real s : {0.1L, 1.0L}) {
                const Complex v = f.raw_value(x, 0.8L, s);
                CHECK(std::abs(v.imag()) < 1e-10L * std::abs(v.real()) + 1e-14L);
            }
    }
}

TEST_CASE("step kernel from closed-form scattering data") {
    // h = (1/pi) int xi(X, t, k) R(k) dk + 2 int_0^h xi(X, t, i sigma) rho'(sigma) d sigma
    // with X = x + s and rho' = 2 sigma sqrt(h^2 - sigma^2) / (pi h^2), both by
    // composite Simpson; sigma = sin(theta) removes the edge singularity.
    const KernelFamily f = family(Potential::pure_step(1));
    const Real t = 0.1L, K = 60;
    const long n = 480000, m = 2000;
    const Real dk = 2 * K / n, dth = kPi / 2 / m;
    auto simpson = [](long i, long last) -> Real { return (i == 0 || i == last) ? 1 : (i % 2 ? 4 : 2); };
    for (Real x : {-1.0L, 0.0L, 1.0L})
        for (Real s : {0.3L, 1.0L}) {
            Real line = 0, cut = 0;
            for (long i = 0; i <= n; ++i) {
                const Real k = -K + i * dk;
                line += simpson(i, n) * (xi(x + s, t, Complex(k, 0)) * oracles::pure_step_reflection(1, k)).real();
            }
            for (long i = 0; i <= m; ++i) {
                const Real th = i * dth, sg = std::sin(th), c = std::cos(th);
                cut += simpson(i, m) * 2 * sg * c * c / kPi * std::exp(8 * sg * sg * sg * t - 2 * sg * (x + s));
            }
            const Real ref = line * dk / 3 / kPi + 2 * cut * dth / 3;
            CHECK(std::abs(f.value(x, t, s) - ref) < 1e-7L);
        }
    const SymbolSplit sp{f};
    for (Real k : {0.7L, 2.0L, 4.0L})
        CHECK(std::abs(assemble_symbol(sp, 0, 0.05L, k) - std::conj(assemble_symbol(sp, 0, 0.05L, -k))) < 1e-10L);
    // Large k: R(k) ~ -h^2 / (4 k^2).
    CHECK(std::abs(oracles::pure_step_reflection(1, 10) * 400 + 1) < 0.02L);
}

TEST_CASE("negative time and zero time are rejected on the contour path") {
    const KernelFamily f = family(Potential::pure_step(1));
    CHECK_THROWS_AS(f.value(0, 0, 1), ConfigError);
    CHECK_THROWS_AS(f.value(0, -1, 1), ConfigError);
}

#include <doctest.h>

#include <kdvist/oracles.hpp>
#include <kdvist/scattering.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace kdvist;

namespace {

const Complex I(0, 1);

// Left-incident scattering of a single constant layer q = V on [0, L], by the
// exact transfer matrix. Returns (|R|, |T|).
std::pair<Real, Real> box_transfer(Real V, Real L, Real k) {
    const Complex p = std::sqrt(Complex(k * k - V, 0));
    // psi = e^{ikx} to the right of the layer, carried back to x = 0.
    const Complex psiL = std::exp(I * k * L), dpsiL = I * k * psiL;
    const Complex c = std::cos(p * L), s = std::sin(p * L);
    const Complex psi0 = psiL * c - dpsiL * s / p;
    const Complex dpsi0 = psiL * p * s + dpsiL * c;
    // psi = A e^{ikx} + B e^{-ikx} on x < 0.
    const Complex A = (psi0 + dpsi0 / (I * k)) / Real(2);
    const Complex B = (psi0 - dpsi0 / (I * k)) / Real(2);
    return {std::abs(B / A), 1 / std::abs(A)};
}

// Negative eigenvalues of -d^2/dx^2 + q on [-L, L], Dirichlet, second differences.
int fd_bound_state_count(const Potential& q, Real L, int n) {
    const double h = static_cast<double>(2 * L / (n + 1));
    Eigen::VectorXd d(n), e(n - 1);
    for (int i = 0; i < n; ++i) d(i) = 2 / (h * h) + static_cast<double>(q(-L + (i + 1) * h));
    e.setConstant(-1 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    int count = 0;
    for (int i = 0; i < n; ++i) count += es.eigenvalues()(i) < 0;
    return count;
}

}  // namespace

TEST_CASE("Faddeev function") {
    const auto z = faddeev_right(Potential::zero(), 0.3L, Complex(0.7L, 0));
    CHECK(std::abs(z.y - Real(1)) < 1e-14L);
    CHECK(std::abs(z.dy) < 1e-14L);

    // psi_+(x, k) = e^{ikx} (k + i tanh x) / (k + i) for the unit soliton.
    const Potential s = Potential::soliton(1, 0);
    CHECK(std::abs(faddeev_right(s, 0, I).y - Real(0.5)) < 1e-10L);
    CHECK(std::abs(std::abs(faddeev_right(s, 0, Complex(1, 0)).y) - 1 / std::sqrt(Real(2))) < 1e-10L);
    for (Real x : {-2.0L, -0.5L, 1.5L}) {
        const Complex k(0.8L, 0);
        const Complex exact = (k + I * std::tanh(x)) / (k + I);
        CHECK(std::abs(faddeev_right(s, x, k).y - exact) < 1e-10L);
    }
}

TEST_CASE("Jost data is conjugate symmetric on the real axis") {
    const Potential q = Potential::box(-1, 0, 1);
    for (Real k : {0.3L, 1.0L, 2.7L}) {
        const auto p = faddeev_right(q, -0.5L, Complex(k, 0));
        const auto m = faddeev_right(q, -0.5L, Complex(-k, 0));
        CHECK(std::abs(m.y - std::conj(p.y)) < 1e-12L);
        CHECK(std::abs(m.dy - std::conj(p.dy)) < 1e-12L);
    }
}

TEST_CASE("reflection and transmission") {
    std::vector<Real> ks;
    for (int i = -40; i <= 40; ++i)
        if (i != 0) ks.push_back(Real(0.25L) * i);

    const auto z = half_line_scattering(Potential::zero(), 0, ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(std::abs(z.R0[i]) < 1e-14L);
        CHECK(std::abs(z.T0[i] - Real(1)) < 1e-14L);
    }

    const auto s = half_line_scattering(Potential::soliton(1, 0), -30, ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(std::abs(s.R0[i]) <= 1e-8L);
        const Complex k(ks[i], 0);
        CHECK(std::abs(std::abs(s.T0[i]) - 1) < 1e-8L);
        CHECK(std::abs(s.T0[i] - (k + I) / (k - I)) < 1e-8L);
    }

    const auto b = half_line_scattering(Potential::box(-1, 0, 1), -1, ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const Real u = std::norm(b.R0[i]) + std::norm(b.T0[i]);
        CHECK(std::abs(u - 1) < 1e-8L);
        const auto [r, t] = box_transfer(-1, 1, ks[i]);
        CHECK(std::abs(std::abs(b.R0[i]) - r) < 1e-9L);
        CHECK(std::abs(std::abs(b.T0[i]) - t) < 1e-9L);
    }
    // Symmetry, contraction and decay.
    const std::size_t n = ks.size();
    Real last = 0;
    for (std::size_t i = 0; i < n / 2; ++i) {
        CHECK(std::abs(b.R0[i] - std::conj(b.R0[n - 1 - i])) < 1e-12L);
        CHECK(std::abs(b.T0[i] - std::conj(b.T0[n - 1 - i])) < 1e-12L);
        CHECK(std::abs(b.R0[i]) < 1);
    }
    last = std::abs(b.R0.back()) * ks.back();
    CHECK(last < 0.5L * std::abs(b.R0[n / 2 + 4]) * ks[n / 2 + 4] + 1e-3L);
}

TEST_CASE("unitarity on further decaying profiles") {
    const std::vector<std::pair<Potential, Real>> cases{
        {Potential::box(-4, 0, 3), -1},
        {Potential::box(0.5L, -1, 1), -2},
        {Potential::sum({Potential::box(-0.5L, 0, 2), Potential::box(0.3L, 2, 2.5L)}), -1},
    };
    const std::vector<Real> ks{-3, -1.1L, -0.2L, 0.05L, 0.7L, 2, 6.5L};
    for (const auto& [q, a] : cases) {
        const auto d = half_line_scattering(q, a, ks);
        for (std::size_t i = 0; i < ks.size(); ++i) CHECK(std::abs(std::norm(d.R0[i]) + std::norm(d.T0[i]) - 1) < 1e-6L);
    }
}

TEST_CASE("bound states") {
    CHECK(bound_states(Potential::zero(), 0).empty());

    const auto s = bound_states(Potential::soliton(1, 0), -40);
    REQUIRE(s.size() == 1);
    CHECK(std::abs(s[0].kappa - 1) < 1e-10L);
    CHECK(std::abs(s[0].c - 2) < 1e-8L);

    const auto two = bound_states(Potential::n_soliton({{2, 0}, {1, 0}}), -40);
    REQUIRE(two.size() == 2);
    CHECK(std::abs(two[0].kappa - 2) < 1e-8L);
    CHECK(std::abs(two[1].kappa - 1) < 1e-8L);
    const auto exact = oracles::SolitonData::from_positions({{2, 0}, {1, 0}});
    for (int i = 0; i < 2; ++i) CHECK(std::abs(two[i].c / exact.c[i] - 1) < 1e-7L);

    const std::vector<std::pair<Potential, Real>> cases{
        {Potential::soliton(1, 0), -40},
        {Potential::n_soliton({{2, 0}, {1, 0}}), -40},
        {Potential::box(-1, 0, 1), -1},
        {Potential::box(-4, 0, 3), -1},
        {Potential::box(-10, 0, 3), -1},
        {Potential::box(-0.5L, 0, 2), -1},
    };
    for (const auto& [q, a] : cases) {
        const auto bs = bound_states(q, a);
        CHECK(static_cast<int>(bs.size()) == fd_bound_state_count(q, 40, 8000));
        for (std::size_t i = 0; i < bs.size(); ++i) {
            CHECK(bs[i].kappa > 0);
            CHECK(bs[i].c > 0);
            if (i) CHECK(bs[i].kappa < bs[i - 1].kappa);
        }
    }
}

TEST_CASE("Weyl m-functions") {
    CHECK(std::abs(weyl_m(Potential::zero(), Side::right, 0, Complex(-1, 0)) + Real(1)) < 1e-12L);
    CHECK(std::abs(weyl_m(Potential::pure_step(1), Side::left, 0, Complex(-2, 0)) + Real(1)) < 1e-12L);
    const Complex mi = weyl_m(Potential::zero(), Side::right, 0, I);
    CHECK(std::abs(mi - std::exp(Complex(0, 3 * kPi / 4))) < 1e-12L);
    CHECK(mi.imag() > 0);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> re(-5, 5), im(0.05, 4);
    const std::vector<Potential> qs{Potential::soliton(1, 0), Potential::pure_step(1), Potential::box(-0.5L, 0, 2)};
    for (const auto& q : qs)
        for (int i = 0; i < 8; ++i) {
            const Complex lam(re(rng), im(rng));
            CHECK(weyl_m(q, Side::right, 0.5L, lam).imag() > 0);
            CHECK(weyl_m(q, Side::left, 0.5L, lam).imag() > 0);
        }

    // m_+ = i sqrt(lambda) + o(1) for a decaying right tail.
    const Potential s = Potential::soliton(1, 0);
    Real prev = 1e300L;
    for (Real r : {25.0L, 100.0L, 400.0L}) {
        const Complex lam = r * std::exp(Complex(0, 1.0L));
        const Real d = std::abs(weyl_m(s, Side::right, 0, lam) - I * std::sqrt(lam));
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 0.1L);
}

TEST_CASE("truncated m-functions converge away from the spectrum") {
    const Potential q = Potential::pure_step(1);
    for (Complex lam : {Complex(-2.5L, 0), Complex(0.5L, 1), Complex(3, 2)}) {
        const Complex full = weyl_m(q, Side::left, 0, lam);
        Real prev = 1e300L;
        for (Real b : {-5.0L, -10.0L, -20.0L, -40.0L}) {
            const Real d = std::abs(weyl_m(q.truncate(b), Side::left, 0, lam) - full);
            CHECK((d < prev || d < 1e-13L));
            prev = d;
        }
        CHECK(prev < 1e-8L);
    }
}

TEST_CASE("analytic part") {
    const Potential step = Potential::pure_step(1);
    const Real r3 = std::sqrt(Real(3));
    CHECK(std::abs(analytic_part(step, 0, Complex(0, 2)) - (2 - r3) / (2 + r3)) < 1e-10L);
    for (Real k : {0.1L, 0.5L, 1.0L, 3.0L, 10.0L}) {
        const Complex A = analytic_part(step, 0, Complex(k, 0));
        CHECK(std::abs(A - oracles::pure_step_reflection(1, k)) < 1e-8L);
    }
    for (Complex z : {Complex(0.3L, 1), Complex(-2, 0.5L), Complex(5, 3)})
        CHECK(std::abs(analytic_part(Potential::zero(), 0, z)) < 1e-14L);

    // At most cubic growth along the contour.
    const Potential box = Potential::box(-0.5L, 0, 2);
    for (Real al : {5.0L, 20.0L, 80.0L})
        CHECK(std::abs(analytic_part(box, 0, Complex(al, 1))) < 1 + std::pow(al, 3));
}

TEST_CASE("cut density") {
    const std::vector<Real> eps{1e-2L, 5e-3L, 2.5e-3L, 1.25e-3L};
    const auto z = rho_density(Potential::zero(), 0, {0.2L, 0.5L}, eps);
    for (Real d : z.density) CHECK(std::abs(d) < 1e-12L);

    const auto r = rho_density(Potential::pure_step(1), 0, {0.5L, 0.9L, 0.97L}, {1e-3L, 5e-4L, 2.5e-4L, 1.25e-4L});
    CHECK(std::abs(r.density[0] - 2 * 0.5L * std::sqrt(0.75L) / kPi) < 1e-5L);
    CHECK(std::abs(r.density[0] - 0.27566L) < 1e-5L);
    // Square-root edge: density / sqrt(h - s) tends to 2 sqrt(2) / pi.
    for (int i = 1; i <= 2; ++i) {
        const Real s = r.s[i];
        CHECK(std::abs(r.density[i] / std::sqrt(1 - s) - 2 * s * std::sqrt(1 + s) / kPi) < 1e-3L);
    }
}

TEST_CASE("split point selection") {
    const auto a = select_a(Potential::pure_step(1));
    CHECK(a.a >= 0);
    CHECK(bound_states(Potential::pure_step(1), a.a).empty());
    const auto s = select_a(Potential::soliton(1, 0));
    CHECK(bound_states(Potential::soliton(1, 0), s.a).empty());
}

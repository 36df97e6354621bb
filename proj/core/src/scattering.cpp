#include <kdvist/ode.hpp>
#include <kdvist/scattering.hpp>

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace kdvist {

namespace {

constexpr Complex I{0, 1};

OdeOptions ode_options(const ScatterOptions& opts) {
    OdeOptions o;
    o.rtol = opts.tol;
    return o;
}

std::string fmt(Real v) {
    std::ostringstream os;
    os.precision(10);
    os << static_cast<double>(v);
    return os.str();
}

// Integrates across the potential's breakpoints so that no Runge-Kutta stage
// straddles a jump. Inside each piece q is sampled strictly in the interior.
template <std::size_t N, class Rhs, class Obs = NoObserver>
void integrate_pieces(const Potential& q, Real from, Real to, OdeState<N>& y, Rhs&& rhs, const OdeOptions& o,
                      Obs&& obs = {}) {
    if (from == to) return;
    const Real lo = std::min(from, to), hi = std::max(from, to);
    std::vector<Real> cuts{from};
    const auto bps = q.breakpoints();
    if (from > to) {
        for (auto it = bps.rbegin(); it != bps.rend(); ++it)
            if (*it > lo && *it < hi) cuts.push_back(*it);
    } else {
        for (Real b : bps)
            if (b > lo && b < hi) cuts.push_back(b);
    }
    cuts.push_back(to);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Real p0 = std::min(cuts[i], cuts[i + 1]), p1 = std::max(cuts[i], cuts[i + 1]);
        const Real in0 = std::nextafter(p0, p1), in1 = std::nextafter(p1, p0);
        auto f = [&](Real x, const OdeState<N>& s, OdeState<N>& ds) {
            const Real xe = std::clamp(x, in0, in1);
            rhs(x, q(xe), s, ds);
        };
        dop853<N>(f, cuts[i], cuts[i + 1], y, o, obs);
    }
}

// sqrt(w) on the decaying branch (Re > 0). On the cut, i.e. w real negative,
// which only happens for real z, take the limit from the upper half z-plane.
Complex decaying_root(Complex w, Complex z) {
    if (w.imag() == 0 && w.real() < 0 && z.imag() == 0) {
        const Real r = std::sqrt(-w.real());
        return Complex(0, z.real() >= 0 ? -r : r);
    }
    Complex s = std::sqrt(w);
    if (s.real() < 0) s = -s;
    return s;
}

bool finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

// d' = d^2 + 2iz d - q, with m_- = iz + d.
Complex run_left_riccati(const Potential& q, Real x_far, Real a, Complex z, Complex d0, const OdeOptions& o) {
    OdeState<1> s{d0};
    integrate_pieces<1>(
        q, x_far, a, s,
        [z](Real, Real qx, const OdeState<1>& v, OdeState<1>& dv) { dv[0] = v[0] * v[0] + Real(2) * I * z * v[0] - qx; },
        o);
    if (!finite(s[0]) || std::abs(s[0]) > 1e50L) throw IntegrationError("left Riccati blow-up");
    return s[0];
}

// Linear fallback: Psi_- = e^{-izx} v, v'' = 2iz v' + q v, d = -v'/v.
Complex run_left_linear(const Potential& q, Real x_far, Real a, Complex z, Complex d0, const OdeOptions& o) {
    OdeState<2> s{Complex(1), -d0};
    integrate_pieces<2>(
        q, x_far, a, s,
        [z](Real, Real qx, const OdeState<2>& v, OdeState<2>& dv) {
            dv[0] = v[1];
            dv[1] = Real(2) * I * z * v[1] + qx * v[0];
        },
        o);
    if (s[0] == Complex(0)) throw NumericalError("left Weyl solution vanishes at a");
    return -s[1] / s[0];
}

// q_far is the constant value of q left of x_far.
Complex left_at(const Potential& q, Real x_far, Real q_far, Real a, Complex z, const OdeOptions& o, bool& fallback) {
    const Complex d0 = -decaying_root(q_far - z * z, z) - I * z;
    try {
        return run_left_riccati(q, x_far, a, z, d0, o);
    } catch (const IntegrationError&) {
        fallback = true;
        return run_left_linear(q, x_far, a, z, d0, o);
    }
}

// g' = q - 2iz g - g^2 with m_+ = iz + g, integrated leftward.
Complex right_at(const Potential& q, Real x_far, Real a, Complex z, const OdeOptions& o, bool& fallback) {
    const Complex g0 = -decaying_root(q(x_far) - z * z, z) - I * z;
    try {
        OdeState<1> s{g0};
        integrate_pieces<1>(
            q, x_far, a, s,
            [z](Real, Real qx, const OdeState<1>& v, OdeState<1>& dv) { dv[0] = qx - Real(2) * I * z * v[0] - v[0] * v[0]; },
            o);
        if (!finite(s[0]) || std::abs(s[0]) > 1e50L) throw IntegrationError("right Riccati blow-up");
        return s[0];
    } catch (const IntegrationError&) {
        fallback = true;
        OdeState<2> s{Complex(1), g0};
        integrate_pieces<2>(
            q, x_far, a, s,
            [z](Real, Real qx, const OdeState<2>& v, OdeState<2>& dv) {
                dv[0] = v[1];
                dv[1] = qx * v[0] - Real(2) * I * z * v[1];
            },
            o);
        if (s[0] == Complex(0)) throw NumericalError("right Weyl solution vanishes at a");
        return s[1] / s[0];
    }
}

// Left of the support the truncated potential is numerically zero, so bound
// state work starts there. Integrating through that empty stretch only feeds
// the growing mode and costs digits in psi_+(a).
Real effective_left(const Potential& q, Real a) {
    const Real lo = q.support().first;
    return std::isfinite(lo) ? std::max(a, lo) : a;
}

Real wronskian_imag_axis(const Potential& q, Real a, Real kappa, const ScatterOptions& opts) {
    const JostSolution j = faddeev_right(q, a, Complex(0, kappa), opts);
    return (j.dy - 2 * kappa * j.y).real();
}

}  // namespace

Real right_end(const Potential& q, Real a, const ScatterOptions& opts) {
    Real xm = opts.x_max;
    if (std::isnan(xm)) {
        xm = q.support().second;
        if (!std::isfinite(xm)) throw ConfigError("potential does not decay at +infinity; no right integration end");
    }
    return std::max(xm, a);
}

JostSolution faddeev_right(const Potential& q, Real a, Complex k, const ScatterOptions& opts) {
    if (k.imag() < 0) throw ConfigError("faddeev_right: Im k must be >= 0");
    const Real xm = right_end(q, a, opts);
    OdeState<2> s{Complex(1), Complex(0)};
    try {
        integrate_pieces<2>(
            q, xm, a, s,
            [k](Real, Real qx, const OdeState<2>& v, OdeState<2>& dv) {
                dv[0] = v[1];
                dv[1] = qx * v[0] - Real(2) * I * k * v[1];
            },
            ode_options(opts));
    } catch (const IntegrationError& e) {
        throw IntegrationError(std::string("faddeev_right at k=(") + fmt(k.real()) + "," + fmt(k.imag()) +
                               "), a=" + fmt(a) + ": " + e.what());
    }
    return {k, s[0], s[1], a};
}

ScatteringData half_line_scattering(const Potential& q, Real a, const std::vector<Real>& k_grid,
                                    const ScatterOptions& opts) {
    ScatteringData out;
    out.a = a;
    out.k_grid = k_grid;
    auto eval = [&](Real k, Complex& R, Complex& T) {
        const JostSolution j = faddeev_right(q, a, Complex(k), opts);
        const Complex w = j.dy + Real(2) * I * k * j.y;
        if (std::abs(w) < 1e-300L) throw NumericalError("half_line_scattering: Wronskian underflow at k=" + fmt(k));
        R = -std::exp(-Real(2) * I * k * a) * std::conj(j.dy) / w;
        T = Real(2) * I * k / w;
    };
    Real spacing = 1e-3L;
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (k_grid[i] != k_grid[i - 1]) spacing = std::min(spacing, std::abs(k_grid[i] - k_grid[i - 1]));
    for (Real k : k_grid) {
        Complex R, T;
        if (k == 0) {
            // Limit from both sides of zero; the conjugate pair averages to the real limit.
            const Real d = spacing * 1e-3L;
            Complex Rp, Tp, Rm, Tm;
            eval(d, Rp, Tp);
            eval(-d, Rm, Tm);
            R = (Rp + Rm) / Real(2);
            T = (Tp + Tm) / Real(2);
            out.notes.push_back("k=0 evaluated as a one-sided limit");
        } else {
            eval(k, R, T);
        }
        out.R0.push_back(R);
        out.T0.push_back(T);
    }
    return out;
}

int count_bound_states_above(const Potential& q, Real a, Real kappa0, const ScatterOptions& opts) {
    a = effective_left(q, a);
    const Real xm = right_end(q, a, opts);
    OdeOptions o = ode_options(opts);
    // Keep steps under a quarter of the local half-wavelength so no sign change hides.
    o.h_max = 0.4L / std::max<Real>(1, q.lower_bound_h());
    OdeState<2> s{Complex(1), Complex(0)};
    int changes = 0;
    int sign = 1;
    integrate_pieces<2>(
        q, xm, a, s,
        [kappa0](Real, Real qx, const OdeState<2>& v, OdeState<2>& dv) {
            dv[0] = v[1];
            dv[1] = qx * v[0] + 2 * kappa0 * v[1];
        },
        o,
        [&](Real, const OdeState<2>& v) {
            const Real r = v[0].real();
            if (r == 0) return;
            const int sg = r > 0 ? 1 : -1;
            if (sg != sign) ++changes;
            sign = sg;
        });
    // Left of a the solution is A e^{kappa (x-a)} + B e^{-kappa (x-a)} (scaled).
    const Real y = s[0].real(), dy = s[1].real();
    if (kappa0 > 0) {
        const Real A = dy / (2 * kappa0), B = y - dy / (2 * kappa0);
        if (A * B < 0 && std::abs(B) < std::abs(A)) ++changes;
    } else if (dy != 0 && y / dy > 0) {
        ++changes;
    }
    return changes;
}

std::vector<BoundState> bound_states(const Potential& q, Real a, const ScatterOptions& opts,
                                     std::vector<std::string>* notes) {
    a = effective_left(q, a);
    const int n_total = count_bound_states_above(q, a, opts.kappa_res, opts);
    if (notes && count_bound_states_above(q, a, 0, opts) > n_total)
        notes->push_back("possible threshold resonance below kappa=" + fmt(opts.kappa_res));
    std::vector<BoundState> out;
    if (n_total == 0) return out;

    Real hi = q.lower_bound_h() * Real(1.01) + Real(1e-3);
    while (count_bound_states_above(q, a, hi, opts) > 0) hi *= 2;

    std::vector<Real> roots;
    std::function<void(Real, Real, int, int)> split = [&](Real lo, Real up, int c_lo, int c_up) {
        const int n = c_lo - c_up;
        if (n <= 0) return;
        if (n == 1) {
            auto W = [&](Real k) { return wronskian_imag_axis(q, a, k, opts); };
            const Real w_lo = W(lo), w_up = W(up);
            if ((w_lo > 0) != (w_up > 0)) {
                boost::uintmax_t it = 200;
                auto r = boost::math::tools::toms748_solve(
                    W, lo, up, w_lo, w_up,
                    [](Real l, Real u) { return std::abs(u - l) <= 4 * std::numeric_limits<Real>::epsilon() * u; },
                    it);
                roots.push_back((r.first + r.second) / 2);
                return;
            }
            // Sign information lost to rounding: fall back on bisection of the count.
            while (up - lo > 1e-15L * up) {
                const Real mid = (lo + up) / 2;
                if (count_bound_states_above(q, a, mid, opts) == c_up) up = mid;
                else lo = mid;
            }
            roots.push_back((lo + up) / 2);
            return;
        }
        if (up - lo < 1e-12L * up)
            throw NumericalError("bound_states: near-degenerate eigenvalues near kappa=" + fmt(lo) +
                                 "; refine the grid or tolerance");
        const Real mid = (lo + up) / 2;
        const int c_mid = count_bound_states_above(q, a, mid, opts);
        split(mid, up, c_mid, c_up);
        split(lo, mid, c_lo, c_mid);
    };
    split(opts.kappa_res, hi, n_total, 0);
    std::sort(roots.begin(), roots.end(), std::greater<>());

    const Real xm = right_end(q, a, opts);
    OdeOptions norm_opts = ode_options(opts);
    norm_opts.shared_components = 2;
    // Match the two decaying solutions at the bottom of the well; each side is
    // integrated in its stable direction.
    Real xmatch = a, qmin = std::numeric_limits<Real>::infinity();
    for (int i = 0; i <= 4000; ++i) {
        const Real x = a + (xm - a) * i / 4000;
        if (const Real v = q(x); v < qmin) {
            qmin = v;
            xmatch = x;
        }
    }
    for (Real kappa : roots) {
        // psi_+ = e^{-kappa x} y; the third component accumulates psi_+^2.
        OdeState<3> r{Complex(1), Complex(0), Complex(0)};
        integrate_pieces<3>(
            q, xm, xmatch, r,
            [kappa](Real x, Real qx, const OdeState<3>& v, OdeState<3>& dv) {
                dv[0] = v[1];
                dv[1] = qx * v[0] + 2 * kappa * v[1];
                dv[2] = std::exp(-2 * kappa * x) * v[0] * v[0];
            },
            norm_opts);
        // psi_- = e^{kappa (x - a)} left of a, carried rightward.
        OdeState<3> l{Complex(1), Complex(kappa), Complex(0)};
        integrate_pieces<3>(
            q, a, xmatch, l,
            [kappa](Real, Real qx, const OdeState<3>& v, OdeState<3>& dv) {
                dv[0] = v[1];
                dv[1] = (qx + kappa * kappa) * v[0];
                dv[2] = v[0] * v[0];
            },
            norm_opts);
        const Real psi_plus = std::exp(-kappa * xmatch) * r[0].real();
        const Real ratio = psi_plus / l[0].real();
        const Real norm = -r[2].real() + std::exp(-2 * kappa * xm) / (2 * kappa) +
                          ratio * ratio * (1 / (2 * kappa) + l[2].real());
        out.push_back({kappa, 1 / norm});
    }
    return out;
}

WeylResult weyl_m_detail(const Potential& q, Side side, Real a, Complex lambda, const ScatterOptions& opts) {
    if (lambda.imag() < 0) {
        WeylResult r = weyl_m_detail(q, side, a, std::conj(lambda), opts);
        r.m = std::conj(r.m);
        return r;
    }
    const Complex z = std::sqrt(lambda);  // Im z >= 0 for Im lambda >= 0
    if (side == Side::left) {
        WeylResult r = left_deviation(q, a, z, opts);
        r.m += I * z;
        return r;
    }
    WeylResult r;
    r.x_far = right_end(q, a, opts);
    r.m = I * z + right_at(q, r.x_far, a, z, ode_options(opts), r.linear_fallback);
    return r;
}

Complex weyl_m(const Potential& q, Side side, Real a, Complex lambda, const ScatterOptions& opts) {
    return weyl_m_detail(q, side, a, lambda, opts).m;
}

WeylResult left_deviation(const Potential& q, Real a, Complex z, const ScatterOptions& opts) {
    const OdeOptions o = ode_options(opts);
    WeylResult r;
    if (std::isfinite(opts.x_far)) {
        r.x_far = std::min(opts.x_far, a);
        r.m = left_at(q, r.x_far, q(r.x_far), a, z, o, r.linear_fallback);
        return r;
    }
    const Real xc = q.left_constant_from();
    if (std::isfinite(xc) || xc > 0) {
        // Constant potential beyond xc: the initializer is exact there.
        r.x_far = std::isfinite(xc) ? std::min(xc, a) : a;
        r.m = left_at(q, r.x_far, q(r.x_far - 1), a, z, o, r.linear_fallback);
        return r;
    }
    // Unknown far field: double the integration length until m settles.
    Real len = 16;
    Complex prev = left_at(q, a - len, q(a - len), a, z, o, r.linear_fallback);
    for (int it = 0; it < 12; ++it) {
        len *= 2;
        const Complex cur = left_at(q, a - len, q(a - len), a, z, o, r.linear_fallback);
        if (std::abs(cur - prev) <= 10 * opts.tol * std::max<Real>(1, std::abs(cur + I * z))) {
            r.x_far = a - len;
            r.m = cur;
            return r;
        }
        prev = cur;
    }
    throw NumericalError("weyl_m: left Riccati start did not settle by x_far=" + fmt(a - len));
}

Complex transmission(const Potential& q, Real a, Complex z, const ScatterOptions& opts) {
    const JostSolution j = faddeev_right(q, a, z, opts);
    return Real(2) * I * z / (j.dy + Real(2) * I * z * j.y);
}

Complex analytic_part(const Potential& q, Real a, Complex z, const ScatterOptions& opts) {
    if (z == Complex(0)) throw NumericalError("analytic_part: z = 0 is never evaluated directly");
    const JostSolution j = faddeev_right(q, a, z, opts);
    const Complex g = j.dy / j.y;
    const Complex d = left_deviation(q, a, z, opts).m;
    const Complex p = Real(2) * I * z + g;
    const Complex s = p + d;  // m_- + m_+
    if (std::abs(s) < 1e-30L * std::max<Real>(1, std::abs(z)) || std::abs(p) == 0)
        throw NumericalError("analytic_part: m_- + m_+ vanishes at z=(" + fmt(z.real()) + "," + fmt(z.imag()) + ")");
    // Same as 2iz/(y^2 (m_- + m_+)) - T/y, rearranged so that A inherits the
    // relative accuracy of d = m_- - iz.
    return -Real(2) * I * z * d / (j.y * j.y * p * s);
}

RhoResult rho_density(const Potential& q, Real a, const std::vector<Real>& s_grid,
                      const std::vector<Real>& eps_sequence, const ScatterOptions& opts) {
    if (eps_sequence.size() < 2) throw ConfigError("rho_density: need at least two eps values");
    for (std::size_t i = 1; i < eps_sequence.size(); ++i)
        if (!(eps_sequence[i] < eps_sequence[i - 1]) || !(eps_sequence[i] > 0))
            throw ConfigError("rho_density: eps sequence must be positive and decreasing");
    RhoResult out;
    out.s = s_grid;
    const Real h = q.lower_bound_h();
    for (Real s : s_grid) {
        if (!(s > 0) || (h > 0 && !(s < h))) throw ConfigError("rho_density: s must lie inside (0, h)");
        std::vector<Real> vals;
        for (Real e : eps_sequence) vals.push_back(analytic_part(q, a, Complex(e, s), opts).imag() / kPi);
        // Neville extrapolation to eps = 0.
        std::vector<Real> p = vals;
        const auto& e = eps_sequence;
        Real prev_est = p.front();
        for (std::size_t m = 1; m < p.size(); ++m) {
            for (std::size_t i = p.size() - 1; i >= m; --i) {
                p[i] = (e[i - m] * p[i] - e[i] * p[i - 1]) / (e[i - m] - e[i]);
                if (i == m) break;
            }
            if (m + 1 == p.size()) prev_est = p[m - 1];
        }
        Real est = p.back();
        const Real spread = std::abs(est - prev_est);
        const Real scale = std::max<Real>(std::abs(est), 1e-12L);
        if (!std::isfinite(est) || spread > 1e-3L * scale + 1e-10L) {
            std::ostringstream os;
            os << "rho_density: extrapolation did not converge at s=" << fmt(s) << "; trace:";
            for (std::size_t i = 0; i < vals.size(); ++i) os << ' ' << fmt(e[i]) << ':' << fmt(vals[i]);
            throw NumericalError(os.str());
        }
        if (est < 0) {
            if (est < -1e-8L) out.warnings.push_back("rho_density: clamped negative value at s=" + fmt(s));
            est = 0;
        }
        out.density.push_back(est);
        out.eps_trace.push_back(std::move(vals));
    }
    return out;
}

ASelection select_a(const Potential& q, const ScatterOptions& opts) {
    ASelection out;
    auto [lo, hi] = q.support();
    if (q.kind() == PotentialKind::zero) return out;
    if (!std::isfinite(hi)) throw ConfigError("select_a: potential must decay at +infinity");
    const Real a0 = std::isfinite(lo) ? lo : std::min<Real>(hi, 0) - 1;
    auto has_bound = [&](Real a) {
        out.tried.push_back(a);
        return a < hi && count_bound_states_above(q, a, opts.kappa_res, opts) > 0;
    };
    if (!has_bound(a0)) {
        out.a = a0;
        return out;
    }
    Real bad = a0, good = hi;
    for (Real step = 1;; step *= 2) {
        const Real a = std::min(a0 + step, hi);
        if (!has_bound(a)) {
            good = a;
            break;
        }
        bad = a;
        if (a >= hi) break;
    }
    while (good - bad > 0.25L) {
        const Real mid = (good + bad) / 2;
        if (has_bound(mid)) bad = mid;
        else good = mid;
    }
    out.a = good;
    std::ostringstream os;
    os << "a selected at " << fmt(good) << " after " << out.tried.size() << " bound-state checks";
    out.notes.push_back(os.str());
    return out;
}

Real spectral_top(const Potential& q, const ScatterOptions& opts) {
    if (q.kind() == PotentialKind::zero) return 0;
    if (!q.left_decaying()) return q.lower_bound_h();
    const Real lo = q.support().first;
    const auto bs = bound_states(q, lo, opts);
    return bs.empty() ? 0 : bs.front().kappa;
}

}  // namespace kdvist

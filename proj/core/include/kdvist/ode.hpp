#pragma once

#include <kdvist/types.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace kdvist {

template <std::size_t N>
using OdeState = std::array<Complex, N>;

struct OdeOptions {
    Real rtol = 1e-14L;
    // Tiny absolute floor: the Faddeev and Riccati unknowns often decay
    // exponentially and must keep their relative accuracy.
    Real atol = 1e-60L;
    Real h_init = 0;
    Real h_max = std::numeric_limits<Real>::infinity();
    long max_steps = 500000;
    std::size_t shared_components = static_cast<std::size_t>(-1);  // see dop853 scaling
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long evals = 0;
};

struct NoObserver {
    template <class S>
    void operator()(Real, const S&) const {}
};

namespace detail {
// Dormand-Prince 8(5,3) tableau (Hairer, Norsett & Wanner), 24 digits.
struct Dop853Tableau {
    static constexpr Real c2 = 0.05260015195876773187856L, c3 = 0.07890022793815159781784L,
                          c4 = 0.11835034190722739672676L, c5 = 0.28164965809277260327324L,
                          c6 = 0.33333333333333333333333L, c7 = 0.25L, c8 = 0.30769230769230769230769L,
                          c9 = 0.65128205128205128205128L, c10 = 0.6L, c11 = 0.85714285714285714285714L;
    static constexpr Real b1 = 0.05429373411656876223805L, b6 = 4.45031289275240888144114L,
                          b7 = 1.89151789931450038304282L, b8 = -5.80120396001058478146721L,
                          b9 = 0.31116436695781989440892L, b10 = -0.15216094966251607855618L,
                          b11 = 0.20136540080403034837478L, b12 = 0.04471061572777259051769L;
    static constexpr Real bhh1 = 0.24409448818897637795276L, bhh2 = 0.73384668828161185734136L,
                          bhh3 = 0.02205882352941176470588L;
    static constexpr Real er1 = 0.01312004499419488073250L, er6 = -1.22515644637620444072057L,
                          er7 = -0.49575894965725019152141L, er8 = 1.66437718245498653696153L,
                          er9 = -0.35032884874997368168865L, er10 = 0.33417911871301747902973L,
                          er11 = 0.08192320648511571246571L, er12 = -0.02235530786388629525884L;
    static constexpr Real a21 = 0.05260015195876773187856L;
    static constexpr Real a31 = 0.01972505698453789945446L, a32 = 0.05917517095361369836338L;
    static constexpr Real a41 = 0.02958758547680684918169L, a43 = 0.08876275643042054754507L;
    static constexpr Real a51 = 0.24136513415926668550237L, a53 = -0.88454947932828608534486L,
                          a54 = 0.92483400326179200311574L;
    static constexpr Real a61 = 0.03703703703703703703704L, a64 = 0.17082860872947387127960L,
                          a65 = 0.12546768756682242501669L;
    static constexpr Real a71 = 0.037109375L, a74 = 0.17025221101954403931498L, a75 = 0.06021653898045596068502L,
                          a76 = -0.017578125L;
    static constexpr Real a81 = 0.03709200011850479271088L, a84 = 0.17038392571223999381021L,
                          a85 = 0.10726203044637328465181L, a86 = -0.01531943774862440175279L,
                          a87 = 0.00827378916381402288758L;
    static constexpr Real a91 = 0.62411095871607571711443L, a94 = -3.36089262944694129406857L,
                          a95 = -0.86821934684172600681819L, a96 = 27.5920996994467083049416L,
                          a97 = 20.1540675504778934086187L, a98 = -43.4898841810699588477366L;
    static constexpr Real a101 = 0.47766253643826436589043L, a104 = -2.48811461997166764192642L,
                          a105 = -0.59029082683684299637145L, a106 = 21.2300514481811942347289L,
                          a107 = 15.2792336328824235832597L, a108 = -33.2882109689848629194453L,
                          a109 = -0.02033120170850862613582L;
    static constexpr Real a111 = -0.93714243008598732571704L, a114 = 5.18637242884406370830024L,
                          a115 = 1.09143734899672957818500L, a116 = -8.14978701074692612513997L,
                          a117 = -18.5200656599969598641566L, a118 = 22.7394870993505042818970L,
                          a119 = 2.49360555267965238987089L, a1110 = -3.04676447189821950038237L;
    static constexpr Real a121 = 2.27331014751653820792360L, a124 = -10.5344954667372501984067L,
                          a125 = -2.00087205822486249909676L, a126 = -17.9589318631187989172766L,
                          a127 = 27.9488845294199600508500L, a128 = -2.85899827713502369474066L,
                          a129 = -8.87285693353062954433549L, a1210 = 12.3605671757943030647266L,
                          a1211 = 0.64339274601576353035597L;
};

template <std::size_t N>
Real rms_norm(const OdeState<N>& v, const std::array<Real, N>& sk, std::size_t n = N) {
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Real r = std::abs(v[i]) / sk[i];
        s += r * r;
    }
    return std::sqrt(s / n);
}
}  // namespace detail

// Adaptive 8th-order explicit Runge-Kutta from x0 to x1 (either direction).
// f(x, y, dy) fills dy; obs(x, y) sees every accepted step.
template <std::size_t N, class F, class Obs = NoObserver>
OdeStats dop853(F&& f, Real x0, Real x1, OdeState<N>& y, const OdeOptions& opt = {}, Obs&& obs = {}) {
    using T = detail::Dop853Tableau;
    using S = OdeState<N>;
    OdeStats st;
    if (x1 == x0) return st;
    const Real dir = x1 > x0 ? 1 : -1;
    const Real span = std::abs(x1 - x0);

    S k1, k2, k3, k4, k5, k6, k7, k8, k9, k10, k11, k12, yt, yn;
    std::array<Real, N> sk;
    auto eval = [&](Real x, const S& in, S& out) {
        f(x, in, out);
        ++st.evals;
    };
    auto scale = [&](const S& a, const S& b) {
        // The leading components share one scale (y' starts at exactly zero);
        // any trailing quadrature components are scaled on their own.
        const std::size_t shared = std::min(N, opt.shared_components);
        Real m = 0;
        for (std::size_t i = 0; i < shared; ++i) m = std::max({m, std::abs(a[i]), std::abs(b[i])});
        for (std::size_t i = 0; i < N; ++i)
            sk[i] = opt.atol + opt.rtol * (i < shared ? m : std::max(std::abs(a[i]), std::abs(b[i])));
    };

    Real x = x0;
    eval(x, y, k1);

    Real h = opt.h_init;
    if (!(h > 0)) {
        // Starting step from the local derivative scale (Hairer's hinit, simplified).
        // Quadrature components start at zero and would force a tiny first step.
        const std::size_t nh = std::min(N, opt.shared_components);
        scale(y, y);
        const Real d0 = detail::rms_norm<N>(y, sk, nh), d1 = detail::rms_norm<N>(k1, sk, nh);
        Real h0 = (d0 < 1e-5L || d1 < 1e-5L) ? 1e-6L : 0.01L * d0 / d1;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + dir * h0 * k1[i];
        eval(x + dir * h0, yt, k2);
        S diff;
        for (std::size_t i = 0; i < N; ++i) diff[i] = k2[i] - k1[i];
        const Real d2 = detail::rms_norm<N>(diff, sk, nh) / h0;
        const Real dm = std::max(d1, d2);
        const Real h1 = dm <= 1e-15L ? std::max(1e-6L, h0 * 1e-3L) : std::pow(0.01L / dm, 1.0L / 8);
        h = std::min({100 * h0, h1, span});
    }
    h = std::min(h, opt.h_max);

    constexpr Real safe = 0.9L, fac1 = 0.333L, fac2 = 6.0L;
    bool last = false;
    while (true) {
        if (st.steps + st.rejected >= opt.max_steps) {
            std::ostringstream os;
            os << "ODE integration exceeded " << opt.max_steps << " steps at x=" << static_cast<double>(x);
            throw IntegrationError(os.str());
        }
        if (h < std::max(std::abs(x), Real(1)) * 64 * std::numeric_limits<Real>::epsilon()) {
            std::ostringstream os;
            os << "ODE step size underflow at x=" << static_cast<double>(x);
            throw IntegrationError(os.str());
        }
        if (h >= std::abs(x1 - x)) {
            h = std::abs(x1 - x);
            last = true;
        }
        const Real hs = dir * h;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * T::a21 * k1[i];
        eval(x + T::c2 * hs, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (T::a31 * k1[i] + T::a32 * k2[i]);
        eval(x + T::c3 * hs, yt, k3);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (T::a41 * k1[i] + T::a43 * k3[i]);
        eval(x + T::c4 * hs, yt, k4);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (T::a51 * k1[i] + T::a53 * k3[i] + T::a54 * k4[i]);
        eval(x + T::c5 * hs, yt, k5);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (T::a61 * k1[i] + T::a64 * k4[i] + T::a65 * k5[i]);
        eval(x + T::c6 * hs, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a71 * k1[i] + T::a74 * k4[i] + T::a75 * k5[i] + T::a76 * k6[i]);
        eval(x + T::c7 * hs, yt, k7);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a81 * k1[i] + T::a84 * k4[i] + T::a85 * k5[i] + T::a86 * k6[i] + T::a87 * k7[i]);
        eval(x + T::c8 * hs, yt, k8);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a91 * k1[i] + T::a94 * k4[i] + T::a95 * k5[i] + T::a96 * k6[i] +
                                 T::a97 * k7[i] + T::a98 * k8[i]);
        eval(x + T::c9 * hs, yt, k9);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a101 * k1[i] + T::a104 * k4[i] + T::a105 * k5[i] + T::a106 * k6[i] +
                                 T::a107 * k7[i] + T::a108 * k8[i] + T::a109 * k9[i]);
        eval(x + T::c10 * hs, yt, k10);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a111 * k1[i] + T::a114 * k4[i] + T::a115 * k5[i] + T::a116 * k6[i] +
                                 T::a117 * k7[i] + T::a118 * k8[i] + T::a119 * k9[i] + T::a1110 * k10[i]);
        eval(x + T::c11 * hs, yt, k11);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (T::a121 * k1[i] + T::a124 * k4[i] + T::a125 * k5[i] + T::a126 * k6[i] +
                                 T::a127 * k7[i] + T::a128 * k8[i] + T::a129 * k9[i] + T::a1210 * k10[i] +
                                 T::a1211 * k11[i]);
        eval(x + hs, yt, k12);

        S incr;
        for (std::size_t i = 0; i < N; ++i) {
            incr[i] = T::b1 * k1[i] + T::b6 * k6[i] + T::b7 * k7[i] + T::b8 * k8[i] + T::b9 * k9[i] +
                      T::b10 * k10[i] + T::b11 * k11[i] + T::b12 * k12[i];
            yn[i] = y[i] + hs * incr[i];
        }
        scale(y, yn);
        Real err = 0, err2 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const Real e2 = std::abs(incr[i] - T::bhh1 * k1[i] - T::bhh2 * k9[i] - T::bhh3 * k12[i]) / sk[i];
            err2 += e2 * e2;
            const Real e1 = std::abs(T::er1 * k1[i] + T::er6 * k6[i] + T::er7 * k7[i] + T::er8 * k8[i] +
                                     T::er9 * k9[i] + T::er10 * k10[i] + T::er11 * k11[i] + T::er12 * k12[i]) /
                            sk[i];
            err += e1 * e1;
        }
        Real deno = err + 0.01L * err2;
        if (deno <= 0) deno = 1;
        err = h * err / std::sqrt(deno * N);
        if (!std::isfinite(err)) err = std::numeric_limits<Real>::infinity();

        const Real fac = std::clamp(std::pow(err, 1.0L / 8) / safe, 1 / fac2, 1 / fac1);
        if (err <= 1) {
            for (std::size_t i = 0; i < N; ++i)
                if (!std::isfinite(yn[i].real()) || !std::isfinite(yn[i].imag())) {
                    std::ostringstream os;
                    os << "ODE solution overflow at x=" << static_cast<double>(x + hs);
                    throw IntegrationError(os.str());
                }
            x = last ? x1 : x + hs;
            y = yn;
            ++st.steps;
            obs(x, y);
            if (last) return st;
            eval(x, y, k1);
            h = std::min(h / fac, opt.h_max);
        } else {
            ++st.rejected;
            last = false;
            h /= std::min(1 / fac1, std::pow(err, 1.0L / 8) / safe);
        }
    }
}

}  // namespace kdvist

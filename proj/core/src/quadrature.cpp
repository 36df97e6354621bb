#include <kdvist/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace kdvist {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: n must be positive");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real x = std::cos(kPi * (i + 0.75L) / (n + 0.5L));
        Real dp = 0;
        for (int it = 0; it < 100; ++it) {
            Real p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            const Real dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 4 * std::numeric_limits<Real>::epsilon()) break;
        }
        // Recompute the derivative at the converged root.
        Real p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1 : n * (x * p1 - p0) / (x * x - 1);
        const Real w = 2 / ((1 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0;
    std::lock_guard lock(mu);
    cache.emplace(n, r);
    return r;
}

QuadratureHalfLine build_quadrature(int n, Real s_max, Real h0) {
    if (n < 4) throw ConfigError("build_quadrature: n must be at least 4");
    if (!(s_max > 0) || !(h0 > 0)) throw ConfigError("build_quadrature: s_max and h0 must be positive");
    const GaussRule g = gauss_legendre(n);
    const Real u_last = (g.x.back() + 1) / 2;
    const Real reach = -std::log1p(-u_last) / (2 * h0);  // last node for sigma = 1
    QuadratureHalfLine q;
    q.n = n;
    q.s_max = s_max;
    q.h0 = h0;
    q.sigma = std::max(1, static_cast<int>(std::ceil(s_max / reach - 1e-12L)));
    const Real c = q.sigma / (2 * h0);
    q.s.resize(n);
    q.w.resize(n);
    for (int i = 0; i < n; ++i) {
        // 1 - u computed without cancellation near u = 1.
        const Real one_minus_u = (1 - g.x[i]) / 2;
        q.s[i] = -c * std::log(one_minus_u);
        q.w[i] = c * (g.w[i] / 2) / one_minus_u;
    }
    return q;
}

ContourRule build_contour_rule(const ContourSpec& sp) {
    if (!(sp.h0 > 0) || !(sp.t_min > 0) || sp.t_max < sp.t_min)
        throw ConfigError("build_contour_rule: needs h0 > 0 and 0 < t_min <= t_max");
    if (sp.per_panel < 4) throw ConfigError("build_contour_rule: per_panel too small");
    ContourRule r;
    r.h0 = sp.h0;
    // Polynomial growth of A and the derivative factors is at most |z|^12. The
    // integrand peaks at e^{8 h0^3 t + 2 h0 |x|} on the axis; decay is counted from there.
    const Real peak = 8 * sp.h0 * sp.h0 * sp.h0 * sp.t_max + 2 * sp.h0 * std::abs(sp.x_span);
    Real Z = 1;
    for (int it = 0; it < 50; ++it) {
        const Real need = sp.decay + peak + 12 * std::log(std::max<Real>(1, std::hypot(Z, sp.h0)));
        const Real nz = std::sqrt(need / (24 * sp.h0 * sp.t_min));
        if (std::abs(nz - Z) < 1e-6L) break;
        Z = nz;
    }
    r.Z = Z;
    const Real gap = std::max<Real>(sp.gap, 1e-6L);
    auto omega = [&](Real al) { return 24 * sp.t_max * al * al + 2 * std::abs(sp.x_span) + 2 * sp.h0; };
    const GaussRule g = gauss_legendre(sp.per_panel);
    Real l = 0;
    while (l < Z) {
        // Width limited by the distance to the singular point i*(h0 - gap)
        // and by the local oscillation rate.
        Real w = std::sqrt(l * l + gap * gap);
        for (int it = 0; it < 3; ++it) w = std::min(w, 16 / omega(l + w));
        w = std::min(w, Z - l);
        if (Z - l - w < 0.25L * w) w = Z - l;
        for (int i = 0; i < sp.per_panel; ++i) {
            r.z.emplace_back(l + w * (g.x[i] + 1) / 2, sp.h0);
            r.w.push_back(w * g.w[i] / 2);
        }
        ++r.panels;
        l += w;
    }
    return r;
}

}  // namespace kdvist

#include <kdvist/symbol.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

namespace kdvist {

namespace {

constexpr Complex I{0, 1};

std::string fmt(Real v) {
    std::ostringstream os;
    os.precision(8);
    os << static_cast<double>(v);
    return os.str();
}

Complex ipow(Complex z, int n) {
    Complex r = 1;
    for (int i = 0; i < n; ++i) r *= z;
    return r;
}

Real ipow(Real z, int n) {
    Real r = 1;
    for (int i = 0; i < n; ++i) r *= z;
    return r;
}

// Six-point Lagrange interpolation on a uniform grid starting at x0.
template <class V>
V lagrange6(const std::vector<V>& f, Real x0, Real dx, Real x) {
    const Real u = (x - x0) / dx;
    long j = static_cast<long>(std::floor(u)) - 2;
    j = std::clamp<long>(j, 0, static_cast<long>(f.size()) - 6);
    V acc{};
    for (int i = 0; i < 6; ++i) {
        Real l = 1;
        for (int m = 0; m < 6; ++m)
            if (m != i) l *= (u - (j + m)) / Real(i - m);
        acc += l * f[j + i];
    }
    return acc;
}

}  // namespace

Complex xi(Real x, Real t, Complex k) {
    const Complex ph = Real(8) * k * k * k * t + Real(2) * k * x;
    const Real logmod = -ph.imag();
    if (logmod > 11000 || logmod < -11000)
        throw NumericalError("xi: |exp(i(8k^3 t + 2kx))| = e^" + fmt(logmod) + " is out of range");
    return std::exp(I * ph);
}

const char* to_string(KernelPath p) {
    switch (p) {
    case KernelPath::automatic: return "auto";
    case KernelPath::zero: return "zero";
    case KernelPath::discrete: return "discrete";
    case KernelPath::contour: return "contour";
    }
    return "?";
}

KernelPath kernel_path_from_string(const std::string& s) {
    if (s == "auto" || s == "automatic") return KernelPath::automatic;
    if (s == "zero") return KernelPath::zero;
    if (s == "discrete") return KernelPath::discrete;
    if (s == "contour") return KernelPath::contour;
    throw ConfigError("unknown kernel path '" + s + "' (auto | zero | discrete | contour)");
}

struct KernelFamily::Impl {
    KernelPath path = KernelPath::zero;
    Potential q;
    SymbolOptions opts;
    Real h0 = 1, a = 0, top = 0;
    Real gap = 1;  // distance from the contour to the nearest singularity
    // Discrete path: the full kernel data. Contour path: poles above the
    // contour, added back exactly from their residues.
    oracles::SolitonData sol;
    std::vector<std::string> notes;

    // Contour rules per dyadic t-bucket, with A e^{-2iza} on the nodes.
    struct Bucket {
        ContourRule rule;
        std::vector<Complex> Ae;
        mutable std::mutex mu;
        mutable std::vector<Complex> Ae_mirror;  // evaluated directly, for the reality check
        // exp(2 i z_j s_i) sqrt(w_i), keyed by the quadrature it was built for
        // Stored in double: the products below are the hot loop and double
        // GEMMs vectorize.
        mutable std::map<std::tuple<int, int, Real>, std::shared_ptr<const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>> E;
    };
    mutable std::mutex mu;
    mutable std::map<std::pair<int, long>, std::shared_ptr<const Bucket>> buckets;
    Real x_span = 20;

    // Phase-free reflection R0 e^{2ika} on a uniform grid over [-kc, kc].
    bool use_r0 = false;
    Real max_r0 = 0;
    Real kc = 0, dkc = 0.05L;
    std::vector<Complex> rt;
    struct RTable {
        Real y0 = 0, dy = 1;
        std::vector<Complex> v;
    };
    mutable std::map<std::tuple<Real, int, int, long>, std::shared_ptr<const RTable>> rtables;

    std::shared_ptr<const Bucket> bucket(Real t) const;
    std::shared_ptr<const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> exps(const Bucket& b,
                                                                           const QuadratureHalfLine& quad) const;
    std::shared_ptr<const RTable> rtable(Real t, int m, int n) const;
    Complex r_tilde(Real k) const { return lagrange6(rt, -kc, dkc, k); }
    Real y_reach() const;
    Complex contour_sum(const Bucket& b, Real X, Real t, int m, int n, bool raw) const;
    Real pole_sum(Real X, Real t, int m, int n) const {
        Real acc = 0;
        for (std::size_t j = 0; j < sol.size(); ++j) {
            const Real k = sol.kappa[j];
            acc += 2 * sol.c[j] * std::exp(8 * k * k * k * t - 2 * k * X) * ipow(-2 * k, m) * ipow(8 * k * k * k, n);
        }
        return acc;
    }
};

std::shared_ptr<const KernelFamily::Impl::Bucket> KernelFamily::Impl::bucket(Real t) const {
    if (!(t > 0)) throw ConfigError("contour kernel needs t > 0 (got t=" + fmt(t) + ")");
    const int e = static_cast<int>(std::floor(std::log2(t)));
    const long span_key = static_cast<long>(std::ceil(x_span));
    std::lock_guard lock(mu);
    if (auto it = buckets.find({e, span_key}); it != buckets.end()) return it->second;
    auto b = std::make_shared<Bucket>();
    ContourSpec sp;
    sp.h0 = h0;
    sp.gap = gap;
    sp.t_min = std::ldexp(Real(1), e);
    sp.t_max = std::ldexp(Real(1), e + 1);
    sp.x_span = std::ceil(x_span) + 10 / h0;
    sp.decay = opts.decay;
    sp.per_panel = opts.per_panel;
    b->rule = build_contour_rule(sp);
    b->Ae.resize(b->rule.z.size());
    for (std::size_t j = 0; j < b->rule.z.size(); ++j) {
        const Complex z = b->rule.z[j];
        b->Ae[j] = analytic_part(q, a, z, opts.scatter) * std::exp(Real(-2) * I * z * a);
    }
    buckets[{e, span_key}] = b;
    return b;
}

std::shared_ptr<const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> KernelFamily::Impl::exps(
    const Bucket& b, const QuadratureHalfLine& quad) const {
    const auto key = std::make_tuple(quad.n, quad.sigma, quad.h0);
    std::lock_guard lock(b.mu);
    if (auto it = b.E.find(key); it != b.E.end()) return it->second;
    const std::size_t nz = b.rule.z.size();
    auto E = std::make_shared<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>(Eigen::MatrixXd(nz, quad.n),
                                                                         Eigen::MatrixXd(nz, quad.n));
    for (std::size_t j = 0; j < nz; ++j)
        for (int i = 0; i < quad.n; ++i) {
            const Complex e = std::sqrt(quad.w[i]) * std::exp(Real(2) * I * b.rule.z[j] * quad.s[i]);
            E->first(j, i) = static_cast<double>(e.real());
            E->second(j, i) = static_cast<double>(e.imag());
        }
    b.E[key] = E;
    return E;
}

Complex KernelFamily::Impl::contour_sum(const Bucket& b, Real X, Real t, int m, int n, bool raw) const {
    Complex acc = 0;
    for (std::size_t j = 0; j < b.rule.z.size(); ++j) {
        const Complex z = b.rule.z[j];
        const Complex f = ipow(Real(2) * I * z, m) * ipow(Real(8) * I * z * z * z, n) *
                          std::exp(I * (Real(8) * z * z * z * t + Real(2) * z * X));
        acc += b.rule.w[j] * f * b.Ae[j];
        if (raw) {
            const Complex zm = -std::conj(z);
            const Complex fm = ipow(Real(2) * I * zm, m) * ipow(Real(8) * I * zm * zm * zm, n) *
                               std::exp(I * (Real(8) * zm * zm * zm * t + Real(2) * zm * X));
            acc += b.rule.w[j] * fm * b.Ae_mirror[j];
        }
    }
    return raw ? acc / kPi : Real(2) * acc.real() / kPi;
}

Real KernelFamily::Impl::y_reach() const {
    // Largest |X - a| the kernel is ever asked for: x range plus two far nodes.
    return std::ceil(x_span) + std::abs(a) + 2 * 40 / h0 + 10;
}

std::shared_ptr<const KernelFamily::Impl::RTable> KernelFamily::Impl::rtable(Real t, int m, int n) const {
    const long span_key = static_cast<long>(std::ceil(x_span));
    const auto key = std::make_tuple(t, m, n, span_key);
    {
        std::lock_guard lock(mu);
        if (auto it = rtables.find(key); it != rtables.end()) return it->second;
    }
    const Real K = kc;
    const Real Y = y_reach();
    Real dk = kPi / (2 * Y);
    if (t > 0) dk = std::min(dk, kPi / (2 * 24 * K * K * t));
    const long J = static_cast<long>(std::ceil(K / dk));
    long N = 1;
    while (N < 8 * 2 * J) N *= 2;
    if (N > (1L << 23))
        throw NumericalError("reflection FFT needs " + std::to_string(N) +
                             " points; lower k_max (tail of R0 at k_max=" + fmt(K) + ") or the x range");
    fftw_complex* buf = fftw_alloc_complex(N);
    std::fill(reinterpret_cast<double*>(buf), reinterpret_cast<double*>(buf) + 2 * N, 0.0);
    const Real taper_start = 0.9L * K;
    for (long j = -J; j <= J; ++j) {
        const Real k = j * dk;
        if (std::abs(k) >= K) continue;
        Real tw = 1;
        if (std::abs(k) > taper_start) tw = 0.5L * (1 + std::cos(kPi * (std::abs(k) - taper_start) / (K - taper_start)));
        const Complex g = tw * ipow(Real(2) * I * k, m) * ipow(Real(8) * I * k * k * k, n) *
                          std::exp(I * Real(8) * k * k * k * t) * r_tilde(k) * dk / kPi;
        const long idx = ((j % N) + N) % N;
        buf[idx][0] = static_cast<double>(g.real());
        buf[idx][1] = static_cast<double>(g.imag());
    }
    fftw_plan plan;
    {
        // Planner calls are not thread safe.
        static std::mutex plan_mu;
        std::lock_guard lock(plan_mu);
        plan = fftw_plan_dft_1d(static_cast<int>(N), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    auto tab = std::make_shared<RTable>();
    // Y_l = l pi / (N dk); store l in [-N/2, N/2) in order.
    tab->dy = kPi / (N * dk);
    tab->y0 = -(N / 2) * tab->dy;
    tab->v.resize(N);
    for (long l = 0; l < N; ++l) {
        const long src = ((l - N / 2) % N + N) % N;
        tab->v[l] = Complex(buf[src][0], buf[src][1]);
    }
    {
        static std::mutex plan_mu2;
        std::lock_guard lock(plan_mu2);
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    std::lock_guard lock(mu);
    rtables[key] = tab;
    return tab;
}

KernelFamily::KernelFamily() : impl_(std::make_shared<Impl>()) {}

KernelFamily KernelFamily::from_solitons(const oracles::SolitonData& data, Real h0) {
    KernelFamily f;
    auto& im = *f.impl_;
    im.path = data.size() ? KernelPath::discrete : KernelPath::zero;
    im.sol = data;
    im.top = data.size() ? data.kappa.front() : 0;
    im.h0 = h0 > 0 ? h0 : (im.top > 0 ? 1.02L * im.top + 0.005L : 1);
    return f;
}

KernelFamily KernelFamily::build(const Potential& q, const SymbolOptions& opts) {
    KernelFamily f;
    auto& im = *f.impl_;
    im.q = q;
    im.opts = opts;
    im.x_span = opts.x_span;
    if (q.kind() == PotentialKind::zero || opts.path == KernelPath::zero) {
        im.path = KernelPath::zero;
        return f;
    }
    const auto [lo, hi] = q.support();
    if (!std::isfinite(hi)) throw ConfigError("potential must decay at +infinity");

    KernelPath path = opts.path;
    if (path == KernelPath::automatic || path == KernelPath::discrete) {
        if (q.left_decaying() && std::isfinite(lo)) {
            // Reflection of the whole profile decides whether the discrete kernel is exact.
            Real rmax = 0;
            std::vector<Real> ks;
            for (int i = 1; i <= 40; ++i) ks.push_back(Real(0.125) * i);
            const auto sd = half_line_scattering(q, lo, ks, opts.scatter);
            for (const auto& r : sd.R0) rmax = std::max(rmax, std::abs(r));
            im.max_r0 = rmax;
            if (rmax < opts.r0_drop || path == KernelPath::discrete) {
                if (rmax >= opts.r0_drop)
                    im.notes.push_back("discrete path forced; reflection up to " + fmt(rmax) + " ignored");
                else
                    im.notes.push_back("reflectionless within " + fmt(opts.r0_drop) + " (max |R| = " + fmt(rmax) +
                                       "); reflection dropped");
                im.path = KernelPath::discrete;
                im.a = lo;
                const auto bs = bound_states(q, lo, opts.scatter, &im.notes);
                for (const auto& b : bs) {
                    im.sol.kappa.push_back(b.kappa);
                    im.sol.c.push_back(b.c);
                }
                im.top = bs.empty() ? 0 : bs.front().kappa;
                im.h0 = std::isnan(opts.h0) ? (im.top > 0 ? 1.02L * im.top + 0.005L : 1) : opts.h0;
                if (im.sol.size() == 0) im.path = KernelPath::zero;
                return f;
            }
        } else if (path == KernelPath::discrete) {
            throw ConfigError("discrete kernel path needs data decaying at both ends");
        }
        path = KernelPath::contour;
    }

    // Contour path.
    im.path = KernelPath::contour;
    if (std::isnan(opts.a)) {
        const ASelection sel = select_a(q, opts.scatter);
        im.a = sel.a;
        im.notes.insert(im.notes.end(), sel.notes.begin(), sel.notes.end());
    } else {
        im.a = opts.a;
        if (count_bound_states_above(q, im.a, opts.scatter.kappa_res, opts.scatter) > 0)
            throw ConfigError("a=" + fmt(im.a) + ": truncated right piece still has bound states");
    }
    im.top = kdvist::spectral_top(q, opts.scatter);
    // Edge of the continuous spectrum: 0 for data decaying on the left.
    const Real h = q.left_decaying() ? Real(0) : q.lower_bound_h();
    std::vector<BoundState> poles;
    if (q.left_decaying() && im.top > 0) poles = bound_states(q, q.support().first, opts.scatter);
    // Above the poles the contour part grows like e^{2 h0 |x|}; once that costs
    // more than eight digits over the x range, run below them instead.
    const std::vector<BoundState> all_poles = poles;
    if (!poles.empty() && std::isnan(opts.h0) && 2 * im.top * opts.x_span < 8 * std::log(Real(10))) poles.clear();
    if (std::isnan(opts.h0)) {
        if (!poles.empty()) {
            // Run the contour below every pole; the poles come back as residues.
            im.h0 = std::max(h, Real(0)) + (poles.back().kappa - std::max(h, Real(0))) / 2;
        } else {
            im.h0 = im.top > 0 ? 1.02L * im.top + 0.005L : std::max<Real>(2 * h, 1);
        }
    } else {
        im.h0 = opts.h0;
        if (!(im.h0 > h)) throw ConfigError("h0=" + fmt(im.h0) + " must exceed h=" + fmt(h));
        if (poles.empty() && !(im.h0 > im.top))
            throw ConfigError("h0=" + fmt(im.h0) + " must exceed the spectral top " + fmt(im.top));
    }
    im.gap = im.h0 - std::max(h, Real(0));
    if (im.gap <= 0) im.gap = im.h0;
    // Poles left below the contour limit the panel size just as the cut does.
    for (const auto& b : all_poles)
        if (b.kappa < im.h0) im.gap = std::min(im.gap, im.h0 - b.kappa);
    for (std::size_t n = 0; n < poles.size(); ++n) {
        const Real k = poles[n].kappa;
        if (std::abs(k - im.h0) < 1e-3L * std::max<Real>(1, k))
            throw ConfigError("h0=" + fmt(im.h0) + " is too close to the bound state kappa=" + fmt(k));
        if (k < im.h0) continue;
        im.gap = std::min(im.gap, k - im.h0);
        // Residue of A at i kappa by the trapezoid rule on a small circle.
        Real r = (k - im.h0) / 2;
        if (n > 0) r = std::min(r, (poles[n - 1].kappa - k) / 3);
        if (n + 1 < poles.size()) r = std::min(r, (k - poles[n + 1].kappa) / 3);
        r = std::min(r, k / 4);
        constexpr int kCircle = 64;
        Complex res = 0;
        for (int j = 0; j < kCircle; ++j) {
            const Complex e = std::polar(r, 2 * kPi * (j + Real(0.5)) / kCircle);
            res += e * analytic_part(q, im.a, Complex(0, k) + e, opts.scatter);
        }
        res /= Real(kCircle);
        // The eigenfunction norming constant is the accurate one; the residue
        // of A is a cross-check (the regular part of A dwarfs it on the circle).
        const Complex c = -I * res * std::exp(2 * k * im.a);
        im.sol.kappa.push_back(k);
        im.sol.c.push_back(poles[n].c);
        const Real dev = std::abs(c - poles[n].c) / poles[n].c;
        im.notes.push_back("pole kappa=" + fmt(k) + " above the contour, norming constant " + fmt(poles[n].c) +
                           " (residue of A gives " + fmt(c.real()) + ")");
        if (dev > 1e-2L)
            throw NumericalError("residue of A at kappa=" + fmt(k) + " disagrees with the norming constant (" +
                                 fmt(c.real()) + " vs " + fmt(poles[n].c) + ")");
    }

    // Reflection of the truncated right piece, sampled on both signs of k.
    const Real xr = right_end(q, im.a, opts.scatter);
    if (xr > im.a) {
        im.dkc = std::min<Real>(0.05L, kPi / (8 * (xr - im.a)));
        auto sample = [&](Real k) {
            if (k == 0) k = im.dkc * 1e-3L;
            const auto sd = half_line_scattering(q, im.a, {k}, opts.scatter);
            return sd.R0[0] * std::exp(Real(2) * I * k * im.a);
        };
        std::vector<Complex> pos{sample(0)};
        Real k = 0, quiet_since = 0;
        while (true) {
            k += im.dkc;
            pos.push_back(sample(k));
            const Real r = std::abs(pos.back());
            im.max_r0 = std::max(im.max_r0, r);
            if (r > opts.r0_tail) quiet_since = k;
            if (k - quiet_since > 2 || k >= opts.k_max) break;
        }
        im.max_r0 = std::max(im.max_r0, std::abs(pos.front()));
        // Bound on the kernel contribution up to second x-derivatives. The
        // k -> 0 sample is left out: a weak tail gives R0 a spike of width
        // ~ int |q| there, which carries no weight.
        Real l1 = 0;
        for (std::size_t j = 1; j < pos.size(); ++j) l1 += 2 * std::abs(pos[j]) * im.dkc;
        const Real bound = l1 / kPi * (1 + 2 * k) * (1 + 2 * k);
        if (bound < opts.r0_drop) {
            im.notes.push_back("reflection of the truncated piece contributes below " + fmt(bound) +
                               " to the kernel (max |R0| " + fmt(im.max_r0) + "); dropped");
        } else {
            if (k >= opts.k_max && k - quiet_since <= 2)
                throw NumericalError("reflection tail |R0| > " + fmt(opts.r0_tail) + " at k_max=" + fmt(opts.k_max) +
                                     "; suggested k_max " + fmt(2 * opts.k_max));
            im.use_r0 = true;
            im.kc = k;
            const long J = static_cast<long>(pos.size()) - 1;
            im.rt.resize(2 * J + 1);
            im.rt[J] = pos[0];
            for (long j = 1; j <= J; ++j) {
                im.rt[J + j] = pos[j];
                im.rt[J - j] = sample(-j * im.dkc);
            }
        }
    } else {
        im.notes.push_back("truncated right piece is empty; reflection is zero");
    }
    return f;
}

KernelPath KernelFamily::path() const { return impl_->path; }
Real KernelFamily::h0() const { return impl_->h0; }
Real KernelFamily::a() const { return impl_->a; }
Real KernelFamily::spectral_top() const { return impl_->top; }
const oracles::SolitonData& KernelFamily::solitons() const { return impl_->sol; }
const std::vector<std::string>& KernelFamily::notes() const { return impl_->notes; }
Real KernelFamily::max_r0() const { return impl_->max_r0; }
bool KernelFamily::uses_r0() const { return impl_->use_r0; }
Real KernelFamily::k_max() const { return impl_->use_r0 ? impl_->kc : 0; }

void KernelFamily::prepare(Real t) const {
    if (impl_->path != KernelPath::contour) return;
    impl_->bucket(t);
}

void KernelFamily::set_x_span(Real span) { impl_->x_span = std::max(impl_->x_span, span); }

Complex KernelFamily::raw_value(Real x, Real t, Real s, int dx, int dt) const {
    const auto& im = *impl_;
    if (dx < 0 || dx > 3 || dt < 0 || dt > 1) throw ConfigError("kernel derivative orders: dx in 0..3, dt in 0..1");
    if (t < 0) throw ConfigError("kernel needs t >= 0");
    const Real X = x + s;
    switch (im.path) {
    case KernelPath::zero:
    case KernelPath::automatic: return 0;
    case KernelPath::discrete: return im.pole_sum(X, t, dx, dt);
    case KernelPath::contour: break;
    }
    auto b = im.bucket(t);
    {
        std::lock_guard lock(b->mu);
        if (b->Ae_mirror.empty()) {
            b->Ae_mirror.resize(b->rule.z.size());
            for (std::size_t j = 0; j < b->rule.z.size(); ++j) {
                const Complex zm = -std::conj(b->rule.z[j]);
                b->Ae_mirror[j] = analytic_part(im.q, im.a, zm, im.opts.scatter) * std::exp(Real(-2) * I * zm * im.a);
            }
        }
    }
    Complex acc = im.contour_sum(*b, X, t, dx, dt, true) + im.pole_sum(X, t, dx, dt);
    if (im.use_r0) {
        auto tab = im.rtable(t, dx, dt);
        acc += lagrange6(tab->v, tab->y0, tab->dy, X - im.a);
    }
    return acc;
}

Real KernelFamily::value(Real x, Real t, Real s, int dx, int dt) const {
    const auto& im = *impl_;
    if (im.path != KernelPath::contour) return raw_value(x, t, s, dx, dt).real();
    if (dx < 0 || dx > 3 || dt < 0 || dt > 1) throw ConfigError("kernel derivative orders: dx in 0..3, dt in 0..1");
    auto b = im.bucket(t);
    Real v = im.contour_sum(*b, x + s, t, dx, dt, false).real() + im.pole_sum(x + s, t, dx, dt);
    if (im.use_r0) {
        auto tab = im.rtable(t, dx, dt);
        v += lagrange6(tab->v, tab->y0, tab->dy, x + s - im.a).real();
    }
    return v;
}

std::vector<MatrixL> KernelFamily::matrices(Real x, Real t, const QuadratureHalfLine& quad, int max_dx,
                                            bool with_dt, bool include_poles) const {
    const auto& im = *impl_;
    if (max_dx < 0 || max_dx > 3) throw ConfigError("kernel derivative orders: dx in 0..3");
    const int n = quad.n;
    const int count = max_dx + 1 + (with_dt ? 1 : 0);
    std::vector<MatrixL> out(count, MatrixL::Zero(n, n));
    auto order = [&](int idx, int& m, int& dt) {
        m = idx <= max_dx ? idx : 0;
        dt = idx <= max_dx ? 0 : 1;
    };
    if (im.path == KernelPath::zero || im.path == KernelPath::automatic) return out;
    if (t < 0) throw ConfigError("kernel needs t >= 0");
    if (im.path == KernelPath::discrete || include_poles) {
        for (std::size_t k = 0; k < im.sol.size(); ++k) {
            const Real kap = im.sol.kappa[k];
            Eigen::Matrix<Real, Eigen::Dynamic, 1> v(n);
            for (int i = 0; i < n; ++i) v(i) = std::sqrt(quad.w[i]) * std::exp(-2 * kap * quad.s[i]);
            const Real base = 2 * im.sol.c[k] * std::exp(8 * kap * kap * kap * t - 2 * kap * x);
            const MatrixL outer = v * v.transpose();
            for (int idx = 0; idx < count; ++idx) {
                int m, dt;
                order(idx, m, dt);
                out[idx] += base * ipow(-2 * kap, m) * ipow(8 * kap * kap * kap, dt) * outer;
            }
        }
        if (im.path == KernelPath::discrete) return out;
    }

    auto b = im.bucket(t);
    auto E = im.exps(*b, quad);
    const Eigen::MatrixXd& Er = E->first;
    const Eigen::MatrixXd& Ei = E->second;
    const std::size_t nz = b->rule.z.size();
    Eigen::MatrixXd Fr(nz, n), Fi(nz, n), P(n, n);
    for (int idx = 0; idx < count; ++idx) {
        int m, dt;
        order(idx, m, dt);
        for (std::size_t j = 0; j < nz; ++j) {
            const Complex z = b->rule.z[j];
            const Complex d = Real(2) / kPi * b->rule.w[j] * ipow(Real(2) * I * z, m) *
                              ipow(Real(8) * I * z * z * z, dt) *
                              std::exp(I * (Real(8) * z * z * z * t + Real(2) * z * x)) * b->Ae[j];
            const double dr = static_cast<double>(d.real()), di = static_cast<double>(d.imag());
            for (int i = 0; i < n; ++i) {
                Fr(j, i) = dr * Er(j, i) - di * Ei(j, i);
                Fi(j, i) = dr * Ei(j, i) + di * Er(j, i);
            }
        }
        P.noalias() = Er.transpose() * Fr;
        P.noalias() -= Ei.transpose() * Fi;
        out[idx] += P.cast<Real>();
        if (im.use_r0) {
            auto tab = im.rtable(t, m, dt);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out[idx](i, j) += std::sqrt(quad.w[i] * quad.w[j]) *
                                      lagrange6(tab->v, tab->y0, tab->dy, x + quad.s[i] + quad.s[j] - im.a).real();
        }
    }
    return out;
}

Complex KernelFamily::symbol(Real x, Real t, Real k) const {
    const auto& im = *impl_;
    if (t < 0) throw ConfigError("symbol needs t >= 0");
    switch (im.path) {
    case KernelPath::zero:
    case KernelPath::automatic: return 0;
    case KernelPath::discrete:
    case KernelPath::contour: break;
    }
    Complex acc = 0;
    for (std::size_t n = 0; n < im.sol.size(); ++n)
        acc += im.sol.c[n] * xi(x, t, Complex(0, im.sol.kappa[n])) / (im.sol.kappa[n] + I * k);
    if (im.path == KernelPath::discrete) return acc;
    if (im.use_r0 && std::abs(k) < im.kc) acc += xi(x, t, k) * im.r_tilde(k) * std::exp(Real(-2) * I * k * im.a);
    auto b = im.bucket(t);
    Complex phi = 0;
    for (std::size_t j = 0; j < b->rule.z.size(); ++j) {
        const Complex z = b->rule.z[j], zm = -std::conj(z);
        phi += b->rule.w[j] * (xi(x, t, z) * b->Ae[j] / (z - k) + xi(x, t, zm) * std::conj(b->Ae[j]) / (zm - k));
    }
    return acc + I / (2 * kPi) * phi;
}

Complex assemble_symbol(const SymbolSplit& split, Real x, Real t, Real k) { return split.family.symbol(x, t, k); }

Real marchenko_kernel(const SymbolSplit& split, Real x, Real t, Real s, int dx_order, int dt_order) {
    if (!(s > 0)) throw ConfigError("marchenko_kernel: s must be positive");
    return split.family.value(x, t, s, dx_order, dt_order);
}

}  // namespace kdvist

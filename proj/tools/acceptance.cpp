#include "acceptance.hpp"

#include <kdvist/oracles.hpp>
#include <kdvist/scattering.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace kdvist::acceptance {

using nlohmann::json;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(Real v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << static_cast<double>(v);
    return os.str();
}

std::vector<Real> linspace(Real lo, Real hi, int n) {
    std::vector<Real> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

Real sech2(Real z) {
    const Real c = std::cosh(z);
    return 1 / (c * c);
}

void say(const Logger& log, const std::string& s) {
    if (log) log(s);
}

// Checks 1 and 2 share the grid and the closed form.
CheckResult one_soliton(int id, KernelPath path, std::vector<Real> ts, Real tol, double budget, Invariants& inv,
                        const Logger& log) {
    CheckResult r;
    r.id = id;
    r.name = path == KernelPath::discrete ? "one-soliton, discrete kernel" : "one-soliton, full numerical path";
    clear_kernel_cache();
    Stopwatch sw;
    SolveOptions o;
    o.symbol.path = path;
    const Potential q = Potential::soliton(1, 0);
    Solver s(q, o);
    const auto f = solve_grid(s, linspace(-10, 10, 201), ts);
    r.seconds = sw.seconds();
    Real err = 0;
    for (const auto& p : f.points) {
        inv.add(p);
        if (!p.ok) {
            err = std::numeric_limits<Real>::infinity();
            continue;
        }
        err = std::max(err, std::abs(p.u + 2 * sech2(p.x - 4 * p.t)));
    }
    const bool right_path = s.kernel().path() == path;
    r.pass = err <= tol && r.seconds <= budget && right_path && f.failures == 0;
    r.summary = "max error " + sci(err) + " (<= " + sci(tol) + "), " + std::to_string(f.points.size()) + " points in " +
                std::to_string(r.seconds).substr(0, 6) + " s (<= " + std::to_string(static_cast<int>(budget)) + " s)";
    r.details = {{"max_error", static_cast<double>(err)},
                 {"seconds", r.seconds},
                 {"points", f.points.size()},
                 {"path", to_string(s.kernel().path())},
                 {"h0", static_cast<double>(s.kernel().h0())},
                 {"a", static_cast<double>(s.kernel().a())},
                 {"max_r0", static_cast<double>(s.kernel().max_r0())},
                 {"notes", s.notes()}};
    say(log, r.summary);
    return r;
}

// Golden-section search for the minimum of u near x0.
Real trough(const Solver& s, Real x0, Real t, Real half_width, Invariants& inv) {
    const Real g = (std::sqrt(Real(5)) - 1) / 2;
    Real lo = x0 - half_width, hi = x0 + half_width;
    auto u = [&](Real x) {
        const PointResult p = s.point(x, t);
        inv.add(p);
        return p.u;
    };
    Real a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    Real fa = u(a), fb = u(b);
    for (int it = 0; it < 48; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = u(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = u(b);
        }
    }
    return (lo + hi) / 2;
}

CheckResult two_soliton(Invariants& inv, const Logger& log) {
    CheckResult r;
    r.id = 3;
    r.name = "two-soliton field and phase shifts";
    Stopwatch sw;
    const std::vector<std::pair<Real, Real>> spec{{2, 0}, {1, 0}};
    const Potential q = Potential::n_soliton(spec);
    const auto exact = oracles::SolitonData::from_positions(spec);
    Solver s(q);
    const auto f = solve_grid(s, linspace(-15, 15, 301), {0.25L, 1});
    Real err = 0;
    for (const auto& p : f.points) {
        inv.add(p);
        err = p.ok ? std::max(err, std::abs(p.u - oracles::n_soliton_field(exact, p.x, p.t)))
                   : std::numeric_limits<Real>::infinity();
    }
    // Trough positions long before and long after the collision, measured on
    // the solver's own field; the free motion is 4 kappa^2 t.
    const Real T = 1.5L;
    const auto& sol = s.kernel().solitons();
    Real shift_err = 0;
    json shifts = json::array();
    for (std::size_t n = 0; n < sol.size(); ++n) {
        const Real k = sol.kappa[n];
        const Real base = std::log(sol.c[n] / (2 * k)) / (2 * k);
        const Real expect = oracles::soliton_phase_shift(exact, n);
        const Real before = trough(s, base - 4 * k * k * T - expect / 2, -T, 1.5L, inv);
        const Real after = trough(s, base + 4 * k * k * T + expect / 2, T, 1.5L, inv);
        const Real measured = after - before - 8 * k * k * T;
        shift_err = std::max(shift_err, std::abs(measured - expect));
        shifts.push_back({{"kappa", static_cast<double>(k)},
                          {"measured", static_cast<double>(measured)},
                          {"classical", static_cast<double>(expect)}});
    }
    r.seconds = sw.seconds();
    r.pass = err <= 1e-6L && shift_err <= 1e-3L && f.failures == 0;
    r.summary = "max field error " + sci(err) + " (<= 1e-6), phase shift error " + sci(shift_err) + " (<= 1e-3)";
    r.details = {{"max_error", static_cast<double>(err)},
                 {"phase_shift_error", static_cast<double>(shift_err)},
                 {"phase_shifts", shifts},
                 {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

CheckResult step_reflection(const Logger& log) {
    CheckResult r;
    r.id = 4;
    r.name = "pure step reflection from integrated m-functions";
    Stopwatch sw;
    const Potential q = Potential::pure_step(1);
    // The left m-function is integrated over [-200, 0], started from the
    // constant-step value at the far end.
    ScatterOptions so;
    so.x_far = -200;
    Real err = 0;
    for (int i = 1; i <= 100; ++i) {
        const Real k = Real(0.1) * i;
        const Complex A = analytic_part(q, 0, Complex(k, 0), so);
        err = std::max(err, std::abs(A - oracles::pure_step_reflection(1, k)));
    }
    // Truncated steps approach the full step's m-function off the real axis.
    const Complex lambda(0.5L, 0.1L);
    const Complex m_full = weyl_m(q, Side::left, 0, lambda);
    json conv = json::array();
    std::vector<Real> diffs;
    for (Real b : {-25.0L, -50.0L, -100.0L, -200.0L}) {
        const Real d = std::abs(weyl_m(q.truncate(b), Side::left, 0, lambda) - m_full);
        diffs.push_back(d);
        conv.push_back({{"b", static_cast<double>(b)}, {"m_difference", static_cast<double>(d)}});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < diffs.size(); ++i) decreasing = decreasing && diffs[i] < diffs[i - 1];
    r.seconds = sw.seconds();
    r.pass = err <= 1e-6L && decreasing;
    r.summary = "max |A(k) - R(k)| " + sci(err) + " (<= 1e-6) on k = 0.1..10; truncated m-functions " +
                (decreasing ? "converge" : "do not converge") + ", last difference " + sci(diffs.back());
    r.details = {{"max_error", static_cast<double>(err)}, {"truncation", conv}, {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

CheckResult truncation(Invariants& inv, const Logger& log) {
    CheckResult r;
    r.id = 5;
    r.name = "truncation convergence, pure step";
    Stopwatch sw;
    const Potential q = Potential::pure_step(1);
    bool ok = true;
    Real worst = 0;
    json rows = json::array();
    for (Real x : {-2.0L, 0.0L, 2.0L}) {
        const auto res = truncation_sweep(q, {-10, -20, -40, -80}, x, 1);
        for (const auto& row : res.rows) {
            PointResult p;
            p.diag = row.diag;
            inv.add(p);
            rows.push_back({{"x", static_cast<double>(x)},
                            {"b", static_cast<double>(row.b)},
                            {"u", static_cast<double>(row.u)},
                            {"diff", std::isnan(row.diff) ? json(nullptr) : json(static_cast<double>(row.diff))}});
        }
        const Real last = res.rows.back().diff;
        worst = std::max(worst, last);
        ok = ok && res.monotone && last <= 1e-4L;
    }
    r.seconds = sw.seconds();
    r.pass = ok;
    r.summary = std::string("differences ") + (ok ? "strictly decreasing" : "NOT all decreasing/small") +
                ", worst final difference " + sci(worst) + " (<= 1e-4)";
    r.details = {{"rows", rows}, {"worst_final_difference", static_cast<double>(worst)}, {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

struct PatchStats {
    Real max_residual = 0, max_u = 0, max_uxxx = 0;
};

// Residual on small space-time stencils around each center: 7 x-points by 3 t-points.
template <class Field>
PatchStats patches(const std::vector<Real>& xc, const std::vector<Real>& tc, Real dx, Real dt, Field&& field) {
    PatchStats st;
    for (Real t : tc)
        for (Real x : xc) {
            std::vector<Real> xs, ts{t - dt, t, t + dt};
            for (int i = -3; i <= 3; ++i) xs.push_back(x + i * dx);
            const SolutionField f = field(xs, ts);
            const auto rep = kdv_residual(f);
            st.max_residual = std::max(st.max_residual, rep.max_residual);
            st.max_u = std::max(st.max_u, rep.max_u);
            st.max_uxxx = std::max(st.max_uxxx, rep.max_uxxx);
        }
    return st;
}

SolutionField analytic_soliton(const std::vector<Real>& xs, const std::vector<Real>& ts) {
    SolutionField f;
    f.xs = xs;
    f.ts = ts;
    for (Real t : ts) {
        std::vector<Real> row;
        for (Real x : xs) row.push_back(-2 * sech2(x - 4 * t));
        f.u.push_back(row);
    }
    return f;
}

CheckResult residual(Invariants& inv, const Logger& log) {
    CheckResult r;
    r.id = 6;
    r.name = "KdV residual, pure step";
    Stopwatch sw;
    const Real dx = 0.01L, dt = 0.001L;
    const auto xc = linspace(-3, 3, 13);
    const std::vector<Real> tc{0.9L, 1.0L, 1.1L};
    const auto cal = patches(xc, tc, dx, dt, analytic_soliton);
    const Real cal_rel = cal.max_residual / cal.max_u;
    Solver s(Potential::pure_step(1));
    const auto st = patches(xc, tc, dx, dt, [&](const std::vector<Real>& xs, const std::vector<Real>& ts) {
        auto f = solve_grid(s, xs, ts);
        for (const auto& p : f.points) inv.add(p);
        return f;
    });
    const Real rel = st.max_residual / st.max_u;
    r.seconds = sw.seconds();
    r.pass = rel <= 1e-3L && cal_rel <= 1e-4L;
    r.summary = "relative residual " + sci(rel) + " (<= 1e-3); analytic soliton on the same stencil " + sci(cal_rel) +
                " (<= 1e-4)";
    r.details = {{"relative_residual", static_cast<double>(rel)},
                 {"max_residual", static_cast<double>(st.max_residual)},
                 {"max_u", static_cast<double>(st.max_u)},
                 {"soliton_calibration", static_cast<double>(cal_rel)},
                 {"dx", 0.01},
                 {"dt", 0.001},
                 {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

CheckResult invariants(const Invariants& inv, const Logger& log) {
    CheckResult r;
    r.id = 7;
    r.name = "operator invariants at every evaluated point";
    r.pass = inv.pass();
    r.summary = std::to_string(inv.points) + " points: asymmetry " + sci(inv.max_asymmetry) + " (<= 1e-12), min det " +
                sci(inv.min_det) + " (> 0), min eigenvalue " + sci(inv.min_eig) + " (>= -0.999), det change " +
                sci(inv.max_det_change) + " (<= 1e-8)";
    r.details = inv.to_json();
    say(log, r.summary);
    return r;
}

CheckResult evolution(const Logger& log) {
    CheckResult r;
    r.id = 8;
    r.name = "time evolution of scattering data";
    Stopwatch sw;
    std::vector<Real> ks;
    for (int i = -30; i <= 30; ++i) ks.push_back(Real(0.1) * i);
    bool ok = true;
    json cases = json::array();
    std::string summary;
    for (int which = 0; which < 2; ++which) {
        const Potential q = which == 0 ? Potential::soliton(1, 0) : Potential::box(-0.5L, 0, 2);
        RescatterOptions o;
        if (which == 1) {
            // Radiation from the box still carries a few 1e-3 at x = -25 by t = 0.1; the
            // far-left tail it leaves outside the window shifts R by far less than 1e-3.
            o.x_lo = -25;
            o.x_hi = 10;
            o.dx = 0.1L;
            o.window_tol = 1e-2L;
        }
        const auto rep = rescatter_check(q, 0.1L, ks, o);
        const bool pass = rep.max_kappa_error <= 1e-6L && rep.max_c_error <= 1e-4L &&
                          rep.max_reflection_mismatch <= 1e-3L && rep.recovered.size() == rep.expected.size();
        ok = ok && pass;
        cases.push_back({{"potential", which == 0 ? "soliton(1,0)" : "box(-0.5,0,2)"},
                         {"kappa_error", static_cast<double>(rep.max_kappa_error)},
                         {"c_error", static_cast<double>(rep.max_c_error)},
                         {"reflection_mismatch", static_cast<double>(rep.max_reflection_mismatch)},
                         {"bound_states", rep.expected.size()},
                         {"window", {static_cast<double>(rep.x_lo), static_cast<double>(rep.x_hi)}},
                         {"notes", rep.notes}});
        summary += std::string(which == 0 ? "soliton" : "; box") + ": kappa " + sci(rep.max_kappa_error) + ", c " +
                   sci(rep.max_c_error) + ", R " + sci(rep.max_reflection_mismatch);
    }
    r.seconds = sw.seconds();
    r.pass = ok;
    r.summary = summary + " (<= 1e-6, 1e-4, 1e-3)";
    r.details = {{"cases", cases}, {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

CheckResult derivative(const Logger& log) {
    CheckResult r;
    r.id = 9;
    r.name = "trace formula against finite differences of log det";
    Stopwatch sw;
    struct Case {
        std::string name;
        Potential q;
        KernelPath path;
        Real x0, x1, t0, t1;
    };
    const std::vector<Case> cases{
        {"soliton, discrete", Potential::soliton(1, 0), KernelPath::automatic, -6, 6, 0, 1},
        {"two-soliton, discrete", Potential::n_soliton({{2, 0}, {1, 0}}), KernelPath::automatic, -8, 8, 0, 0.5L},
        {"soliton, contour", Potential::soliton(1, 0), KernelPath::contour, -5, 5, 0.5L, 1},
        {"pure step", Potential::pure_step(1), KernelPath::automatic, -3, 3, 0.5L, 1.5L},
        {"box", Potential::box(-0.5L, 0, 2), KernelPath::automatic, -3, 4, 0.25L, 0.5L},
    };
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> uni(0, 1);
    const Real h = 0.005L;
    Real worst = 0;
    json per = json::array();
    for (const auto& c : cases) {
        SolveOptions o;
        o.symbol.path = c.path;
        Solver s(c.q, o);
        Real case_worst = 0;
        for (int i = 0; i < 10; ++i) {
            const Real x = c.x0 + (c.x1 - c.x0) * uni(rng);
            const Real t = c.t0 + (c.t1 - c.t0) * uni(rng);
            const Real u = s.point(x, t).u;
            const Real f2 = (-s.log_det(x + 2 * h, t) + 16 * s.log_det(x + h, t) - 30 * s.log_det(x, t) +
                             16 * s.log_det(x - h, t) - s.log_det(x - 2 * h, t)) /
                            (12 * h * h);
            case_worst = std::max(case_worst, std::abs(u + 2 * f2));
        }
        worst = std::max(worst, case_worst);
        per.push_back({{"case", c.name}, {"max_difference", static_cast<double>(case_worst)}});
    }
    r.seconds = sw.seconds();
    r.pass = worst <= 1e-6L;
    r.summary = "50 random points, max |u_trace - u_fd| " + sci(worst) + " (<= 1e-6)";
    r.details = {{"cases", per}, {"max_difference", static_cast<double>(worst)}, {"step", 0.005}, {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

CheckResult smoothing(const Logger& log) {
    CheckResult r;
    r.id = 10;
    r.name = "dispersive smoothing of box data";
    Stopwatch sw;
    Solver s(Potential::box(-0.5L, 0, 2));
    const std::vector<Real> xc{-3, -2, -1, -0.5L, 0, 0.5L, 1, 1.5L, 2, 2.5L, 3, 4};
    auto field = [&](const std::vector<Real>& xs, const std::vector<Real>& ts) { return solve_grid(s, xs, ts); };
    // The radiation left of the box oscillates fast enough at t = 0.1 that the
    // residual-check stencil is truncation-limited; a 4x finer stencil resolves
    // it, and the drop between the two shows the excess is stencil error.
    const auto coarse = patches(xc, {0.1L}, 0.01L, 0.001L, field);
    const auto fine = patches(xc, {0.1L}, 0.0025L, 0.00025L, field);
    const Real rel_coarse = coarse.max_residual / coarse.max_u;
    const Real rel = fine.max_residual / fine.max_u;
    const Real order = std::log(coarse.max_residual / fine.max_residual) / std::log(Real(4));
    r.seconds = sw.seconds();
    r.pass = std::isfinite(fine.max_uxxx) && rel <= 1e-3L && (rel_coarse <= 1e-3L || order >= 1.8L);
    r.summary = "max |u_xxx| " + sci(fine.max_uxxx) + " (finite), relative residual " + sci(rel) +
                " (<= 1e-3) at dx 0.0025, dt 0.00025; " + sci(rel_coarse) + " at dx 0.01, dt 0.001, observed order " +
                sci(order) + " (>= 1.8 if above 1e-3)";
    r.details = {{"max_uxxx", static_cast<double>(fine.max_uxxx)},
                 {"relative_residual", static_cast<double>(rel)},
                 {"relative_residual_coarse", static_cast<double>(rel_coarse)},
                 {"observed_order", static_cast<double>(order)},
                 {"seconds", r.seconds}};
    say(log, r.summary);
    return r;
}

}  // namespace

void Invariants::add(const PointResult& p) {
    ++points;
    max_asymmetry = std::max(max_asymmetry, p.diag.asymmetry);
    min_det = std::min(min_det, p.diag.det);
    min_eig = std::min(min_eig, p.diag.min_eig);
    max_det_change = std::max(max_det_change, p.diag.det_change);
    margin_ok = margin_ok && p.diag.margin_ok && p.ok;
}

void Invariants::merge(const Invariants& o) {
    points += o.points;
    max_asymmetry = std::max(max_asymmetry, o.max_asymmetry);
    min_det = std::min(min_det, o.min_det);
    min_eig = std::min(min_eig, o.min_eig);
    max_det_change = std::max(max_det_change, o.max_det_change);
    margin_ok = margin_ok && o.margin_ok;
}

bool Invariants::pass() const {
    return points > 0 && max_asymmetry <= 1e-12L && min_det > 0 && min_eig >= -1 + 1e-3L &&
           max_det_change <= 1e-8L && margin_ok;
}

json Invariants::to_json() const {
    return {{"points", points},
            {"max_asymmetry", static_cast<double>(max_asymmetry)},
            {"min_det", static_cast<double>(min_det)},
            {"min_eig", static_cast<double>(min_eig)},
            {"max_det_change", static_cast<double>(max_det_change)},
            {"margin_certified", margin_ok}};
}

std::vector<std::string> suite_names() {
    return {"acceptance", "soliton",  "soliton_contour", "two_soliton", "step_reflection", "truncation",
            "residual",   "invariants", "evolution",     "derivative",  "smoothing"};
}

std::vector<CheckResult> run_suite(const std::string& suite, const Logger& log) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end())
        throw ConfigError("unknown suite '" + suite + "'");
    const bool all = suite == "acceptance";
    const bool inv_suite = suite == "invariants";
    auto want = [&](const char* name) { return all || inv_suite || suite == name; };
    std::vector<CheckResult> out;
    Invariants inv;
    if (want("soliton")) out.push_back(one_soliton(1, KernelPath::discrete, {0, 0.5L, 1}, 1e-8L, 1.0, inv, log));
    if (want("soliton_contour"))
        out.push_back(one_soliton(2, KernelPath::contour, {0.5L, 1}, 1e-5L, 120.0, inv, log));
    if (want("two_soliton")) out.push_back(two_soliton(inv, log));
    if (want("step_reflection")) out.push_back(step_reflection(log));
    if (want("truncation")) out.push_back(truncation(inv, log));
    if (want("residual")) out.push_back(residual(inv, log));
    if (all || inv_suite) out.push_back(invariants(inv, log));
    if (all || suite == "evolution") out.push_back(evolution(log));
    if (all || suite == "derivative") out.push_back(derivative(log));
    if (all || suite == "smoothing") out.push_back(smoothing(log));
    return out;
}

json to_json(const std::vector<CheckResult>& results) {
    json checks = json::array();
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.pass;
        checks.push_back({{"id", r.id},
                          {"name", r.name},
                          {"pass", r.pass},
                          {"summary", r.summary},
                          {"seconds", r.seconds},
                          {"details", r.details}});
    }
    return {{"pass", ok}, {"checks", checks}};
}

}  // namespace kdvist::acceptance

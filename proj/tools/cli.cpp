#include "cli.hpp"

#include "acceptance.hpp"

#include <kdvist/potential_io.hpp>
#include <kdvist/scattering.hpp>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef KDVIST_VERSION
#define KDVIST_VERSION "dev"
#endif

namespace kdvist::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_real(Real v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.16Le", v);
    return buf;
}

namespace {

struct HelpRequested {
    std::string text;
};

Real num(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + ": expected a number");
    return j.get<double>();
}

// "from:to:step" or a comma list.
json grid_from_flag(const std::string& s) {
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("grid '" + s + "': expected from:to:step");
        try {
            return {{"from", std::stod(parts[0])}, {"to", std::stod(parts[1])}, {"step", std::stod(parts[2])}};
        } catch (const std::exception&) {
            throw ConfigError("grid '" + s + "': not numeric");
        }
    }
    json list = json::array();
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) {
        try {
            list.push_back(std::stod(p));
        } catch (const std::exception&) {
            throw ConfigError("grid '" + s + "': '" + p + "' is not a number");
        }
    }
    return list;
}

template <class T>
void set_if(const json& j, const char* key, T& field) {
    if (j.contains(key)) {
        if constexpr (std::is_same_v<T, Real>)
            field = num(j.at(key), key);
        else
            field = j.at(key).get<T>();
    }
}

void apply_solver(const json& s, SolveOptions& o) {
    if (!s.is_object()) throw ConfigError("'solver' must be an object");
    set_if(s, "n", o.n);
    set_if(s, "n_discrete", o.n_discrete);
    set_if(s, "n_max", o.n_max);
    set_if(s, "s_max", o.s_max);
    set_if(s, "det_tol", o.det_tol);
    set_if(s, "check_doubling", o.check_doubling);
    set_if(s, "eigen_diagnostics", o.eigen_diagnostics);
    set_if(s, "min_eig_margin", o.min_eig_margin);
    set_if(s, "extra_digits", o.extra_digits);
    set_if(s, "workers", o.workers);
    set_if(s, "failure_cap", o.failure_cap);
    set_if(s, "h0", o.symbol.h0);
    set_if(s, "a", o.symbol.a);
    set_if(s, "k_max", o.symbol.k_max);
    set_if(s, "x_span", o.symbol.x_span);
    set_if(s, "scatter_tol", o.symbol.scatter.tol);
    set_if(s, "x_far", o.symbol.scatter.x_far);
    if (s.contains("path")) o.symbol.path = kernel_path_from_string(s.at("path").get<std::string>());
}

json default_grid(const std::string& cmd, const std::string& axis) {
    if (axis == "x") return {{"from", -10}, {"to", 10}, {"step", 0.1}};
    if (axis == "t") return cmd == "convergence" ? json(1) : json::array({0.5, 1});
    if (axis == "k") return {{"from", 0.05}, {"to", 10}, {"step", 0.05}};
    if (axis == "eps") return json::array({1e-2, 5e-3, 2.5e-3, 1.25e-3});
    if (axis == "bs") return json::array({-10, -20, -40, -80});
    return json::array();
}

json versions() {
    return {{"kdvist", KDVIST_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"compiler", __VERSION__}};
}

json jnum(Real v) {
    if (!std::isfinite(v)) return nullptr;
    return static_cast<double>(v);
}

fs::path out_file(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
}

// Auto-tuned values the run actually used.
json tuned(const Solver& s, const Potential& q) {
    const auto& k = s.kernel();
    json j = {{"path", to_string(k.path())},
              {"a", jnum(k.a())},
              {"h0", jnum(k.h0())},
              {"n", k.path() == KernelPath::contour ? s.options().n : s.options().n_discrete},
              {"n_max", s.options().n_max},
              {"s_max", jnum(s.quadrature().s_max)},
              {"k_max", jnum(k.k_max())},
              {"uses_reflection", k.uses_r0()},
              {"max_r0", jnum(k.max_r0())}};
    j["x_far"] = nullptr;
    if (k.path() == KernelPath::contour) {
        try {
            j["x_far"] = jnum(left_deviation(q, k.a(), Complex(0, k.h0()), s.options().symbol.scatter).x_far);
        } catch (const Error&) {
        }
    }
    return j;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
    const Potential q = c.potential();
    Solver s(q, c.solve);
    const SolutionField f = solve_grid(s, c.xs, c.ts);
    std::string csv = "x,t,u,det,min_eig\n";
    for (const auto& p : f.points)
        csv += format_real(p.x) + "," + format_real(p.t) + "," + format_real(p.u) + "," + format_real(p.diag.det) +
               "," + format_real(p.diag.min_eig) + "\n";
    write_text(out_file(c, "solution.csv"), csv);

    if (c.dump_kernel) {
        std::string k = "x,t,s,h,h_x,h_xx\n";
        const auto& quad = s.quadrature();
        for (Real t : c.ts)
            for (Real x : c.xs)
                for (Real sv : quad.s) {
                    k += format_real(x) + "," + format_real(t) + "," + format_real(sv);
                    for (int d = 0; d <= 2; ++d) k += "," + format_real(s.kernel().value(x, t, sv, d));
                    k += "\n";
                }
        write_text(out_file(c, "kernel.csv"), k);
    }

    json points_by_precision = json::object();
    Real worst_change = 0, worst_asym = 0;
    int max_n = 0;
    for (const auto& p : f.points) {
        points_by_precision[p.diag.precision.empty() ? "none" : p.diag.precision] =
            points_by_precision.value(p.diag.precision.empty() ? "none" : p.diag.precision, 0) + 1;
        worst_change = std::max(worst_change, p.diag.det_change);
        worst_asym = std::max(worst_asym, p.diag.asymmetry);
        max_n = std::max(max_n, p.diag.n);
    }
    json m = {{"command", "solve"},
              {"config", c.echo},
              {"versions", versions()},
              {"tuned", tuned(s, q)},
              {"points", f.points.size()},
              {"failures", f.failures},
              {"max_det_change", jnum(worst_change)},
              {"max_asymmetry", jnum(worst_asym)},
              {"largest_n_used", max_n},
              {"precision", points_by_precision},
              {"notes", s.notes()}};
    for (const auto& n : f.notes)
        if (std::find(s.notes().begin(), s.notes().end(), n) == s.notes().end()) m["notes"].push_back(n);
    write_text(out_file(c, "manifest.json"), m.dump(2) + "\n");
    out << "solved " << f.points.size() << " points (" << to_string(s.kernel().path()) << " kernel, h0 "
        << static_cast<double>(s.kernel().h0()) << ") -> " << (fs::path(c.out_dir) / "solution.csv").string() << "\n";
    return 0;
}

int cmd_convergence(const RunConfig& c, std::ostream& out) {
    const Potential q = c.potential();
    const SweepResult r = truncation_sweep(q, c.bs, c.x0, c.t0, c.solve);
    std::string csv = "b,u,diff,det,min_eig,n\n";
    for (const auto& row : r.rows)
        csv += format_real(row.b) + "," + format_real(row.u) + "," + format_real(row.diff) + "," +
               format_real(row.diag.det) + "," + format_real(row.diag.min_eig) + "," + std::to_string(row.diag.n) +
               "\n";
    write_text(out_file(c, "convergence.csv"), csv);
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back({{"b", jnum(row.b)}, {"u", jnum(row.u)}, {"diff", jnum(row.diff)}});
    const json m = {{"command", "convergence"},
                    {"config", c.echo},
                    {"versions", versions()},
                    {"x", jnum(r.x)},
                    {"t", jnum(r.t)},
                    {"rows", rows},
                    {"extrapolated", jnum(r.extrapolated)},
                    {"monotone", r.monotone},
                    {"notes", r.notes}};
    write_text(out_file(c, "manifest.json"), m.dump(2) + "\n");
    out << csv;
    out << "extrapolated u = " << format_real(r.extrapolated) << (r.monotone ? "" : "  (differences NOT decreasing)")
        << "\n";
    return 0;
}

int cmd_scatter(const RunConfig& c, std::ostream& out) {
    const Potential q = c.potential();
    ScatterOptions so = c.solve.symbol.scatter;
    json notes = json::array();
    Real a = c.solve.symbol.a;
    if (std::isnan(a)) {
        const ASelection sel = select_a(q, so);
        a = sel.a;
        for (const auto& n : sel.notes) notes.push_back(n);
    }
    const ScatteringData d = half_line_scattering(q, a, c.ks, so);
    for (const auto& n : d.notes) notes.push_back(n);
    const auto bs = bound_states(q, a, so);

    Real h0 = c.solve.symbol.h0;
    if (std::isnan(h0)) {
        SymbolOptions opts = c.solve.symbol;
        opts.a = a;
        h0 = cached_kernel(q, opts).h0();
    }
    json rk = json::array(), ac = json::array(), bj = json::array(), rho = json::array();
    std::string r_csv = "k,re_R,im_R,re_T,im_T\n", a_csv = "k,h0,re_A,im_A\n", rho_csv = "s,density\n";
    for (std::size_t i = 0; i < d.k_grid.size(); ++i) {
        rk.push_back({{"k", jnum(d.k_grid[i])},
                      {"R", {jnum(d.R0[i].real()), jnum(d.R0[i].imag())}},
                      {"T", {jnum(d.T0[i].real()), jnum(d.T0[i].imag())}}});
        r_csv += format_real(d.k_grid[i]) + "," + format_real(d.R0[i].real()) + "," + format_real(d.R0[i].imag()) +
                 "," + format_real(d.T0[i].real()) + "," + format_real(d.T0[i].imag()) + "\n";
        const Complex A = analytic_part(q, a, Complex(d.k_grid[i], h0), so);
        ac.push_back({{"k", jnum(d.k_grid[i])}, {"A", {jnum(A.real()), jnum(A.imag())}}});
        a_csv += format_real(d.k_grid[i]) + "," + format_real(h0) + "," + format_real(A.real()) + "," +
                 format_real(A.imag()) + "\n";
    }
    for (const auto& b : bs) bj.push_back({{"kappa", jnum(b.kappa)}, {"c", jnum(b.c)}});
    if (!c.ss.empty()) {
        const RhoResult r = rho_density(q, a, c.ss, c.eps, so);
        for (std::size_t i = 0; i < r.s.size(); ++i) {
            rho.push_back({{"s", jnum(r.s[i])}, {"density", jnum(r.density[i])}});
            rho_csv += format_real(r.s[i]) + "," + format_real(r.density[i]) + "\n";
        }
        for (const auto& w : r.warnings) notes.push_back(w);
    }
    const json doc = {{"command", "scatter"},
                      {"config", c.echo},
                      {"versions", versions()},
                      {"a", jnum(a)},
                      {"h0", jnum(h0)},
                      {"reflection", rk},
                      {"bound_states", bj},
                      {"contour", {{"imag", jnum(h0)}, {"samples", ac}}},
                      {"rho", {{"normalization", "Im A(is + 0) / pi"}, {"samples", rho}}},
                      {"notes", notes}};
    write_text(out_file(c, "scattering.json"), doc.dump(2) + "\n");
    if (c.csv) {
        write_text(out_file(c, "reflection.csv"), r_csv);
        write_text(out_file(c, "contour.csv"), a_csv);
        if (!c.ss.empty()) write_text(out_file(c, "rho.csv"), rho_csv);
    }
    out << "a = " << static_cast<double>(a) << ", " << bs.size() << " bound state(s), " << d.k_grid.size()
        << " k samples -> " << (fs::path(c.out_dir) / "scattering.json").string() << "\n";
    for (const auto& b : bs)
        out << "  kappa = " << format_real(b.kappa) << "  c = " << format_real(b.c) << "\n";
    return 0;
}

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto results = acceptance::run_suite(c.suite, [&](const std::string& s) { err << "  " << s << "\n"; });
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.pass;
        char head[32];
        std::snprintf(head, sizeof head, "%2d", r.id);
        out << (r.pass ? "[PASS] " : "[FAIL] ") << head << " " << r.name << ": " << r.summary << "\n";
    }
    if (c.echo.contains("out")) write_text(out_file(c, "validate.json"), acceptance::to_json(results).dump(2) + "\n");
    return ok ? 0 : 1;
}

}  // namespace

std::vector<Real> parse_grid(const json& j, const std::string& what) {
    std::vector<Real> v;
    if (j.is_number()) {
        v.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& e : j) v.push_back(num(e, what));
    } else if (j.is_object()) {
        const Real from = num(j.at("from"), what + ".from"), to = num(j.at("to"), what + ".to");
        if (j.contains("count")) {
            const int n = j.at("count").get<int>();
            if (n < 1) throw ConfigError(what + ".count must be positive");
            for (int i = 0; i < n; ++i) v.push_back(n == 1 ? from : from + (to - from) * i / (n - 1));
        } else {
            const Real step = num(j.at("step"), what + ".step");
            if (!(step > 0) || !(to >= from)) throw ConfigError(what + ": need step > 0 and to >= from");
            const long n = std::lround(std::floor((to - from) / step + 1e-9L));
            // Points from an integer index, so the grid is reproducible.
            for (long i = 0; i <= n; ++i) v.push_back(from + i * step);
        }
    } else {
        throw ConfigError(what + ": expected a number, a list or {from, to, step}");
    }
    return v;
}

Potential RunConfig::potential() const {
    return potential_from_json(potential_spec.dump(), base_dir);
}

void RunConfig::validate() const {
    auto positive = [](Real v, const char* what) {
        if (!(v > 0)) throw ConfigError(std::string(what) + " must be > 0");
    };
    positive(solve.det_tol, "tol");
    positive(solve.symbol.scatter.tol, "scatter tolerance");
    positive(solve.min_eig_margin, "min_eig_margin");
    if (solve.n < 2 || solve.n_discrete < 2 || solve.n_max < solve.n)
        throw ConfigError("node counts: need n, n_discrete >= 2 and n_max >= n");
    if (command == "solve") {
        if (xs.empty() || ts.empty()) throw ConfigError("solve: x and t grids must be nonempty");
        if (potential().lower_bound_h() > 0)
            for (Real t : ts)
                if (!(t > 0)) throw ConfigError("solve: step-type data needs t > 0");
    }
    if (command == "scatter" && ks.empty()) throw ConfigError("scatter: k grid must be nonempty");
    if (command == "scatter")
        for (Real k : ks)
            if (k == 0) throw ConfigError("scatter: k = 0 is not evaluated; leave it out of the grid");
    if (command == "convergence" && bs.size() < 3) throw ConfigError("convergence: need at least 3 values of b");
}

RunConfig parse_args(int argc, const char* const* argv) {
    CLI::App app{"Inverse-scattering solver for KdV with step-like initial data", "kdvist"};
    app.require_subcommand(1, 1);
    app.fallthrough();  // global flags may follow the subcommand
    std::string config, out, potential, x, t, k, s, eps, bs, at, path, suite;
    int workers = 0, n = 0, n_max = 0;
    double tol = 0, h0 = 0, a = 0;
    auto* o_config = app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_workers = app.add_option("--workers", workers, "worker threads (default: KDVIST_WORKERS or 1)");
    auto* o_tol = app.add_option("--tol", tol, "solve: log det change allowed between node doublings; scatter: ODE tolerance");
    auto* o_pot = app.add_option("--potential", potential, "potential JSON file (overrides the config)");
    auto* o_n = app.add_option("--n", n, "half-line nodes");
    auto* o_nmax = app.add_option("--n-max", n_max, "largest node count for adaptive refinement");
    auto* o_h0 = app.add_option("--h0", h0, "contour height override");
    auto* o_a = app.add_option("--a", a, "split point override");
    auto* o_path = app.add_option("--path", path, "kernel path: auto | discrete | contour");

    auto* solve = app.add_subcommand("solve", "u(x, t) on a grid: CSV plus manifest");
    auto* o_x = solve->add_option("--x", x, "x grid: from:to:step or a comma list (use --x=-5:5:0.1)");
    auto* o_t = solve->add_option("--t", t, "t grid");
    bool dump = false, csv = false;
    solve->add_flag("--dump-kernel", dump, "also write (s, h, h_x, h_xx) at every grid point");

    auto* scatter = app.add_subcommand("scatter", "scattering data, bound states, contour samples and rho");
    auto* o_k = scatter->add_option("--k", k, "k grid");
    auto* o_s = scatter->add_option("--s", s, "s grid for the cut density");
    auto* o_eps = scatter->add_option("--eps", eps, "offsets for the density limit");
    scatter->add_flag("--csv", csv, "also write CSV tables");

    auto* conv = app.add_subcommand("convergence", "truncation sweep at one point");
    auto* o_bs = conv->add_option("--bs", bs, "truncation points, e.g. --bs=-10,-20,-40");
    auto* o_at = conv->add_option("--at", at, "evaluation point x,t");

    auto* val = app.add_subcommand("validate", "run acceptance checks");
    auto* o_suite = val->add_option("--suite", suite, "check to run")->check(CLI::IsMember(acceptance::suite_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    RunConfig c;
    c.command = app.get_subcommands().front()->get_name();
    json j = json::object();
    if (o_config->count()) {
        std::ifstream f(config);
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(config + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError(config + ": top level must be an object");
        c.base_dir = fs::path(config).parent_path().string();
        if (c.base_dir.empty()) c.base_dir = ".";
    }
    auto& sv = j["solver"];
    if (sv.is_null()) sv = json::object();
    if (o_pot->count()) j["potential"] = potential;
    if (o_out->count()) j["out"] = out;
    if (o_workers->count()) sv["workers"] = workers;
    if (o_tol->count()) j["tol"] = tol;
    if (o_n->count()) sv["n"] = n;
    if (o_nmax->count()) sv["n_max"] = n_max;
    if (o_h0->count()) sv["h0"] = h0;
    if (o_a->count()) sv["a"] = a;
    if (o_path->count()) sv["path"] = path;
    if (o_x->count()) j["x"] = grid_from_flag(x);
    if (o_t->count()) j["t"] = grid_from_flag(t);
    if (o_k->count()) j["k"] = grid_from_flag(k);
    if (o_s->count()) j["s"] = grid_from_flag(s);
    if (o_eps->count()) j["eps"] = grid_from_flag(eps);
    if (o_bs->count()) j["bs"] = grid_from_flag(bs);
    if (o_at->count()) {
        const json p = grid_from_flag(at);
        if (!p.is_array() || p.size() != 2) throw ConfigError("--at expects x,t");
        j["point"] = {{"x", p[0]}, {"t", p[1]}};
    }
    if (o_suite->count()) j["suite"] = suite;
    if (dump) j["dump_kernel"] = true;
    if (csv) j["csv"] = true;

    try {
        apply_solver(sv, c.solve);
        if (j.contains("potential")) {
            const json& p = j.at("potential");
            if (p.is_string()) {
                fs::path file = p.get<std::string>();
                if (file.is_relative() && !o_pot->count()) file = fs::path(c.base_dir) / file;
                std::ifstream f(file);
                if (!f) throw ConfigError("cannot read potential file " + file.string());
                std::stringstream ss;
                ss << f.rdbuf();
                c.potential_spec = json::parse(ss.str());
                c.base_dir = file.parent_path().empty() ? "." : file.parent_path().string();
            } else {
                c.potential_spec = p;
            }
        }
        if (j.contains("tol")) {
            const Real v = num(j.at("tol"), "tol");
            if (c.command == "scatter")
                c.solve.symbol.scatter.tol = v;
            else
                c.solve.det_tol = v;
        }
        c.xs = parse_grid(j.value("x", default_grid(c.command, "x")), "x");
        c.ts = parse_grid(j.value("t", default_grid(c.command, "t")), "t");
        c.ks = parse_grid(j.value("k", default_grid(c.command, "k")), "k");
        c.ss = parse_grid(j.value("s", default_grid(c.command, "s")), "s");
        c.eps = parse_grid(j.value("eps", default_grid(c.command, "eps")), "eps");
        c.bs = parse_grid(j.value("bs", default_grid(c.command, "bs")), "bs");
        if (j.contains("point")) {
            c.x0 = num(j["point"].at("x"), "point.x");
            c.t0 = num(j["point"].at("t"), "point.t");
        }
        c.out_dir = j.value("out", std::string("."));
        c.csv = j.value("csv", false);
        c.dump_kernel = j.value("dump_kernel", false);
        c.suite = j.value("suite", std::string("acceptance"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
    j["command"] = c.command;
    j["potential"] = c.potential_spec;
    c.echo = j;
    return c;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        const RunConfig c = parse_args(argc, argv);
        c.validate();
        if (c.command == "solve") return cmd_solve(c, out);
        if (c.command == "scatter") return cmd_scatter(c, out);
        if (c.command == "convergence") return cmd_convergence(c, out);
        return cmd_validate(c, out, err);
    } catch (const HelpRequested& h) {
        out << h.text;
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace kdvist::cli

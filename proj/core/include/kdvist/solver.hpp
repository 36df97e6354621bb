#pragma once

#include <kdvist/hankel.hpp>
#include <kdvist/potential.hpp>
#include <kdvist/scattering.hpp>
#include <kdvist/symbol.hpp>
#include <kdvist/types.hpp>

#include <limits>
#include <string>
#include <vector>

namespace kdvist {

struct SolveOptions {
    SymbolOptions symbol;
    int n = 80;             // half-line nodes, contour path
    int n_discrete = 24;    // half-line nodes, discrete path
    Real s_max = std::numeric_limits<Real>::quiet_NaN();  // NaN: 12 / h0
    bool check_doubling = true;    // rerun det with 2n nodes
    // When doubling moves log det by more than det_tol the point is redone
    // with 2n nodes, up to n_max.
    Real det_tol = 1e-8L;
    int n_max = 320;
    bool eigen_diagnostics = true; // min eigenvalue by full eigendecomposition
    Real min_eig_margin = 1e-3L;   // certified: eigenvalues of M > -1 + margin
    // Working precision must cover log10(1 + lambda_max) plus this many digits.
    Real extra_digits = 10;
    int workers = 0;           // 0: KDVIST_WORKERS or 1
    Real failure_cap = 0;      // tolerated fraction of failed grid points
};

struct PointDiagnostics {
    Real log_det = 0;
    Real det = 1;
    Real min_eig = 0;
    bool margin_ok = true;
    Real asymmetry = 0;
    Real det_change = 0;  // |log det(2n) - log det(n)|, a relative det change
    Real cond_estimate = 1;
    Real lambda_estimate = 0;
    int n = 0;
    std::string precision;
    std::string path;
};

struct PointResult {
    Real x = 0, t = 0;
    Real u = 0;
    bool ok = true;
    std::string error;
    PointDiagnostics diag;
};

struct SolutionField {
    std::vector<Real> xs, ts;
    std::vector<std::vector<Real>> u;  // u[ti][xi]; NaN where the point failed
    std::vector<PointResult> points;   // row-major over (t, x)
    std::vector<std::string> notes;
    int failures = 0;
};

// Scattering, kernel family and quadratures for one potential. Safe to share
// between threads once constructed.
class Solver {
public:
    explicit Solver(const Potential& q, const SolveOptions& opts = {});

    PointResult point(Real x, Real t) const;
    // log det(I + M) alone, in the same precision the point solve would use.
    Real log_det(Real x, Real t) const;
    // Extends the x range the contour rules resolve.
    void reserve_x(Real max_abs_x);

    const KernelFamily& kernel() const { return kernel_; }
    const QuadratureHalfLine& quadrature() const { return levels_.front(); }
    const SolveOptions& options() const { return opts_; }
    const std::vector<std::string>& notes() const { return kernel_.notes(); }

private:
    Potential q_;
    SolveOptions opts_;
    KernelFamily kernel_;
    void evaluate(Real x, Real t, std::size_t level, PointResult& r) const;

    std::vector<QuadratureHalfLine> levels_;  // n, 2n, 4n, ...
};

// Kernel families are cached per (potential fingerprint, symbol options).
KernelFamily cached_kernel(const Potential& q, const SymbolOptions& opts);
void clear_kernel_cache();

PointResult solve_point(const Potential& q, Real x, Real t, const SolveOptions& opts = {});
SolutionField solve_grid(const Potential& q, const std::vector<Real>& xs, const std::vector<Real>& ts,
                         const SolveOptions& opts = {});
SolutionField solve_grid(const Solver& solver, const std::vector<Real>& xs, const std::vector<Real>& ts);

struct SweepRow {
    Real b = 0;
    Real u = 0;
    Real diff = std::numeric_limits<Real>::quiet_NaN();  // |u_b - u_prev|
    PointDiagnostics diag;
};

struct SweepResult {
    Real x = 0, t = 0;
    std::vector<SweepRow> rows;
    Real extrapolated = 0;
    bool monotone = true;  // successive differences strictly decreasing
    std::vector<std::string> notes;
};

SweepResult truncation_sweep(const Potential& q, const std::vector<Real>& bs, Real x, Real t,
                             const SolveOptions& opts = {});

struct ResidualReport {
    std::vector<std::vector<Real>> residual;  // interior points only
    Real max_residual = 0;
    Real max_u = 0;
    Real relative = 0;       // max|r| / max(1, max|u|)
    Real relative_to_u = 0;  // max|r| / max|u|
    Real max_uxxx = 0;       // largest finite-difference third derivative
    Real dx = 0, dt = 0;
};

// u_t - 6 u u_x + u_xxx by central differences (fourth order in x, second in t).
ResidualReport kdv_residual(const SolutionField& field);

struct RescatterOptions {
    SolveOptions solve;
    Real dx = 0.05L;        // solve spacing; the table is refined 5x by local interpolation
    Real x_lo = std::numeric_limits<Real>::quiet_NaN();
    Real x_hi = std::numeric_limits<Real>::quiet_NaN();
    Real window_tol = 1e-6L;  // |u| allowed at the window edges
    // Recovered bound states this close to the threshold cannot be told apart
    // from a zero-energy resonance of the tabulated field.
    Real kappa_floor = 1e-6L;
    ScatterOptions scatter;
};

struct RescatterReport {
    std::vector<Real> k;
    std::vector<Complex> R_evolved, R_recovered;
    Real max_reflection_mismatch = 0;
    std::vector<BoundState> expected, recovered;
    Real max_kappa_error = 0;
    Real max_c_error = 0;
    Real x_lo = 0, x_hi = 0;
    Real edge_value = 0;
    std::vector<std::string> notes;
};

// Solves at time t, tabulates u(., t), scatters it again and compares with the
// evolved data R e^{8ik^3 t}, c_n e^{8 kappa_n^3 t}.
RescatterReport rescatter_check(const Potential& q, Real t, const std::vector<Real>& k_grid,
                                const RescatterOptions& opts = {});

}  // namespace kdvist

#pragma once

#include <kdvist/potential.hpp>
#include <kdvist/types.hpp>

#include <limits>
#include <string>
#include <vector>

namespace kdvist {

struct ScatterOptions {
    Real tol = 1e-14L;  // ODE relative tolerance
    // Right integration end; NaN picks the right end of the support.
    Real x_max = std::numeric_limits<Real>::quiet_NaN();
    // Left Riccati start; NaN picks it from the potential (doubling when unknown).
    Real x_far = std::numeric_limits<Real>::quiet_NaN();
    // Bound states with kappa below this are reported as threshold resonances.
    Real kappa_res = 1e-11L;
};

struct JostSolution {
    Complex k;
    Complex y;   // Faddeev function e^{-ikx} psi_+(x, k)
    Complex dy;  // its x-derivative
    Real at_x = 0;
};

struct BoundState {
    Real kappa = 0;
    Real c = 0;
};

struct ScatteringData {
    std::vector<Real> k_grid;
    std::vector<Complex> R0;
    std::vector<Complex> T0;
    std::vector<BoundState> bound_states;
    Real a = 0;
    std::vector<std::string> notes;
};

enum class Side { left, right };

struct WeylResult {
    Complex m;
    Real x_far = 0;
    bool linear_fallback = false;
};

Real right_end(const Potential& q, Real a, const ScatterOptions& opts = {});

// Integrates y'' + 2ik y' = q y from x_max down to a with y = 1, y' = 0 at x_max.
JostSolution faddeev_right(const Potential& q, Real a, Complex k, const ScatterOptions& opts = {});

// Reflection and transmission of q truncated at a, on real k.
ScatteringData half_line_scattering(const Potential& q, Real a, const std::vector<Real>& k_grid,
                                    const ScatterOptions& opts = {});

// Bound states of q truncated at a, sorted by decreasing kappa.
std::vector<BoundState> bound_states(const Potential& q, Real a, const ScatterOptions& opts = {},
                                     std::vector<std::string>* notes = nullptr);

// Number of bound states of the truncated potential with kappa > kappa0 (oscillation count).
int count_bound_states_above(const Potential& q, Real a, Real kappa0, const ScatterOptions& opts = {});

WeylResult weyl_m_detail(const Potential& q, Side side, Real a, Complex lambda, const ScatterOptions& opts = {});
Complex weyl_m(const Potential& q, Side side, Real a, Complex lambda, const ScatterOptions& opts = {});

// m_- - i z at a, integrated directly so that its relative accuracy survives
// when it is exponentially small (a far right of the support).
WeylResult left_deviation(const Potential& q, Real a, Complex z, const ScatterOptions& opts = {});

// A(z) for z in the closed upper half plane off the imaginary cut.
Complex analytic_part(const Potential& q, Real a, Complex z, const ScatterOptions& opts = {});

// Analytic continuation of T_0 to complex z (psi_- = e^{-izx} left of a).
Complex transmission(const Potential& q, Real a, Complex z, const ScatterOptions& opts = {});

struct RhoResult {
    std::vector<Real> s;
    std::vector<Real> density;
    std::vector<std::vector<Real>> eps_trace;  // raw Im A / pi per eps, per s
    std::vector<std::string> warnings;
};

// Density of the cut measure, Im A(is + eps)/pi extrapolated to eps -> 0.
RhoResult rho_density(const Potential& q, Real a, const std::vector<Real>& s_grid,
                      const std::vector<Real>& eps_sequence, const ScatterOptions& opts = {});

struct ASelection {
    Real a = 0;
    std::vector<Real> tried;
    std::vector<std::string> notes;
};

// Smallest a (to a quarter unit) on a doubling search whose truncation has no
// bound states above kappa_res.
ASelection select_a(const Potential& q, const ScatterOptions& opts = {});

// Top of the imaginary-axis singular set: largest bound state for decaying
// data, the declared h otherwise.
Real spectral_top(const Potential& q, const ScatterOptions& opts = {});

}  // namespace kdvist

#pragma once

#include <kdvist/oracles.hpp>
#include <kdvist/potential.hpp>
#include <kdvist/quadrature.hpp>
#include <kdvist/scattering.hpp>
#include <kdvist/types.hpp>

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace kdvist {

using MatrixL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// exp(i (8 k^3 t + 2 k x)). Throws when the modulus leaves the long double range.
Complex xi(Real x, Real t, Complex k);

enum class KernelPath { automatic, zero, discrete, contour };
const char* to_string(KernelPath p);
KernelPath kernel_path_from_string(const std::string& name);

struct SymbolOptions {
    KernelPath path = KernelPath::automatic;
    // NaN: halfway below the lowest bound state when the data decays on the
    // left (poles are then taken by residues), otherwise just above the spectral top.
    Real h0 = std::numeric_limits<Real>::quiet_NaN();
    Real a = std::numeric_limits<Real>::quiet_NaN();   // NaN: chosen by select_a
    ScatterOptions scatter;
    // Reflection of the truncated right piece below this is treated as zero.
    Real r0_drop = 1e-9L;
    // Real-axis window for the reflection part and the tail level it must reach.
    Real k_max = 40;
    Real r0_tail = 1e-10L;
    // Contour rule controls.
    int per_panel = 20;
    Real decay = 52;
    Real x_span = 20;  // |x| range the contour rules must resolve
};

// Everything the kernel needs, computed once per potential: scattering data,
// A on the contour nodes and the sampled reflection coefficient.
class KernelFamily {
public:
    KernelFamily();  // zero kernel
    static KernelFamily build(const Potential& q, const SymbolOptions& opts = {});
    // Discrete kernel straight from (kappa_n, c_n), bypassing scattering.
    static KernelFamily from_solitons(const oracles::SolitonData& data, Real h0 = 0);

    KernelPath path() const;
    Real h0() const;
    Real a() const;
    Real spectral_top() const;
    // Discrete path: all bound states. Contour path: poles above the contour,
    // whose part of the kernel is added exactly.
    const oracles::SolitonData& solitons() const;
    const std::vector<std::string>& notes() const;
    Real max_r0() const;   // largest sampled |R0|
    bool uses_r0() const;  // reflection part kept in the kernel
    Real k_max() const;

    // h^{(dx, dt)}_{x,t}(s): x- and t-derivatives of the Marchenko kernel.
    Real value(Real x, Real t, Real s, int dx = 0, int dt = 0) const;
    // Raw complex accumulator of value(); its imaginary part measures the
    // conjugate-symmetry defect.
    Complex raw_value(Real x, Real t, Real s, int dx = 0, int dt = 0) const;

    // Kernel matrices sqrt(w_i) h(s_i + s_j) sqrt(w_j) for dx = 0..max_dx (and
    // the t-derivative when with_dt). out[d] holds order d; out[max_dx + 1]
    // the t-derivative. include_poles = false leaves out the residue part of
    // a contour kernel so it can be added in higher precision.
    std::vector<MatrixL> matrices(Real x, Real t, const QuadratureHalfLine& quad, int max_dx,
                                  bool with_dt = false, bool include_poles = true) const;

    // Symbol on the real axis: xi R0 + the Cauchy integral of xi A over the contour.
    Complex symbol(Real x, Real t, Real k) const;

    // Builds the contour rule covering t ahead of time (otherwise lazy).
    void prepare(Real t) const;
    // Resolve up to this |x| (rebuilds contour rules if larger).
    void set_x_span(Real span);

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

// Diagnostic view of the split symbol.
struct SymbolSplit {
    KernelFamily family;
};

Complex assemble_symbol(const SymbolSplit& split, Real x, Real t, Real k);
Real marchenko_kernel(const SymbolSplit& split, Real x, Real t, Real s, int dx_order = 0, int dt_order = 0);

}  // namespace kdvist

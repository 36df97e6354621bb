#pragma once

#include <kdvist/types.hpp>

#include <vector>

namespace kdvist {

struct GaussRule {
    std::vector<Real> x;  // on [-1, 1], increasing
    std::vector<Real> w;
};

// Gauss-Legendre rule by Newton iteration on the three-term recurrence.
GaussRule gauss_legendre(int n);

struct QuadratureHalfLine {
    std::vector<Real> s;  // strictly increasing, > 0
    std::vector<Real> w;  // > 0
    int n = 0;
    Real s_max = 0;
    Real h0 = 0;
    int sigma = 1;  // s = -(sigma / (2 h0)) log(1 - u)
};

// Gauss-Legendre on (0,1) pushed through the exponential map. The integer
// scale sigma is the smallest one whose last node reaches s_max, which keeps
// e^{-2 h0 s} times a polynomial in e^{-2 h0 s / sigma} integrated exactly.
QuadratureHalfLine build_quadrature(int n, Real s_max, Real h0);

// Nodes on the half contour {alpha + i h0 : 0 < alpha <= Z}. The other half
// follows from conjugate symmetry of every integrand we use.
struct ContourRule {
    std::vector<Complex> z;
    std::vector<Real> w;
    Real h0 = 0;
    Real Z = 0;
    int panels = 0;
};

struct ContourSpec {
    Real h0 = 1;
    Real gap = 0.1L;     // distance from the contour to the nearest singularity
    Real t_min = 1;      // damping e^{-24 h0 t alpha^2} is weakest here
    Real t_max = 1;      // oscillation e^{8 i z^3 t} is fastest here
    Real x_span = 10;    // largest |x + s| that must be resolved
    Real decay = 52;     // stop where the integrand is below e^{-decay}
    int per_panel = 20;
};

ContourRule build_contour_rule(const ContourSpec& spec);

}  // namespace kdvist

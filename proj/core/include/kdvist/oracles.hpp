#pragma once

#include <kdvist/types.hpp>

#include <vector>

// Closed-form references. Nothing here calls into the scattering, kernel or
// Nystrom code, so agreement with the pipeline means something.
namespace kdvist::oracles {

struct SolitonData {
    std::vector<Real> kappa;  // distinct, positive, sorted descending
    std::vector<Real> c;      // norming constants, positive

    static SolitonData from_positions(const std::vector<std::pair<Real, Real>>& kappa_x0);
    std::size_t size() const { return kappa.size(); }
};

// det(I + G), G_nm = c_n exp(8 k_n^3 t - 2 k_n x) / (k_n + k_m).
Real n_soliton_det(const SolitonData& data, Real x, Real t);
// log of the same determinant, finite where the determinant itself overflows.
Real n_soliton_log_det(const SolitonData& data, Real x, Real t);
// u = -2 d^2/dx^2 log det. Evaluated through a rescaled matrix so that no
// entry exceeds O(1); accurate for any (x, t).
Real n_soliton_field(const SolitonData& data, Real x, Real t);

struct PureStep {
    Real R;    // reflection coefficient at k
    Real rho;  // cumulative measure at s, as printed: (h^3 - (h^2 - s^2)^{3/2}) / (3 pi h^2)
};

Real pure_step_reflection(Real h, Real k);
Real pure_step_rho(Real h, Real s);
PureStep pure_step_closed_forms(Real h, Real k_or_s);

// Asymptotic position shift of soliton n between t -> -inf and t -> +inf.
Real soliton_phase_shift(const SolitonData& data, std::size_t n);

}  // namespace kdvist::oracles

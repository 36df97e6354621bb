#pragma once

#include <kdvist/oracles.hpp>
#include <kdvist/quadrature.hpp>
#include <kdvist/symbol.hpp>
#include <kdvist/types.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace kdvist {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct NystromOperator {
    QuadratureHalfLine quad;
    Real x = 0, t = 0;
    MatrixL M;
    std::vector<MatrixL> Mx;  // Mx[d-1] is the d-th x-derivative
    MatrixL Mt;
    bool has_t = false;
    Real asymmetry = 0;  // max |M_ij - M_ji| / scale before symmetrization
    Real scale = 1;      // max(1, max |M|)
};

// Fills M (and x-derivatives up to max_dx, plus the t-derivative on request),
// checks the asymmetry against 1e-12 relative and symmetrizes exactly. Without
// the pole part the check is left to the caller, who knows the full scale.
NystromOperator discretize(const KernelFamily& kernel, Real x, Real t, const QuadratureHalfLine& quad, int max_dx = 2,
                           bool with_dt = false, bool include_poles = true);

Real fredholm_det(const NystromOperator& op);
Real log_fredholm_det(const NystromOperator& op);
// d^2/dx^2 log det(I + M) = tr[(I+M)^{-1} M''] - tr[((I+M)^{-1} M')^2].
Real log_det_dx2(const NystromOperator& op);

struct SpectrumDiagnostics {
    std::vector<Real> eigenvalues;      // ascending
    std::vector<Real> singular_values;  // descending
    Real min_eig = 0;
    Real nuclear_norm_estimate = 0;
};
SpectrumDiagnostics spectrum_diagnostics(const NystromOperator& op);

// Precision-generic pieces, used by the solver's extended-precision tiers.

template <class S>
struct DysonTerms {
    S log_det = 0;
    S d2 = 0;  // second x-derivative of log det
    bool margin_ok = true;  // I + M - margin I is positive definite
    Real cond_estimate = 1;
};

// One Cholesky factorization of I + M gives the log-determinant and, when
// M1/M2 are non-empty, the trace formula. Throws on a non-positive pivot.
template <class S>
DysonTerms<S> dyson_terms(const Mat<S>& M, const Mat<S>& M1, const Mat<S>& M2, Real margin = 0) {
    using std::log;
    const Eigen::Index n = M.rows();
    DysonTerms<S> out;
    Mat<S> B = M;
    B.diagonal().array() += S(1);
    Eigen::LLT<Mat<S>> llt(B);
    if (llt.info() != Eigen::Success)
        throw NumericalError("operator eigenvalue <= -1: discretization or scattering failure");
    const auto& L = llt.matrixLLT();
    S lmin = L(0, 0), lmax = L(0, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const S d = L(i, i);
        if (!(d > S(0))) throw NumericalError("operator eigenvalue <= -1: discretization or scattering failure");
        out.log_det += 2 * log(d);
        if (d < lmin) lmin = d;
        if (d > lmax) lmax = d;
    }
    const S ratio = lmax / lmin;
    out.cond_estimate = static_cast<Real>(ratio * ratio);
    if (M1.size() && M2.size()) {
        // With B = L L^T: tr(B^-1 M1 B^-1 M1) = |L^-1 M1 L^-T|_F^2 and
        // tr(B^-1 M2) = sum_ik (L^-1 M2)_ik (L^-1)_ik.
        const auto tri = L.template triangularView<Eigen::Lower>();
        const Mat<S> X1 = tri.solve(M1).transpose();
        const Mat<S> Y1 = tri.solve(X1);
        const Mat<S> Z2 = tri.solve(M2);
        const Mat<S> Linv = tri.solve(Mat<S>::Identity(n, n));
        out.d2 = Z2.cwiseProduct(Linv).sum() - Y1.squaredNorm();
    }
    if (margin > 0) {
        Mat<S> Bm = B;
        Bm.diagonal().array() -= S(margin);
        Eigen::LLT<Mat<S>> l2(Bm);
        out.margin_ok = l2.info() == Eigen::Success;
        if (out.margin_ok)
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(l2.matrixLLT()(i, i) > S(0))) out.margin_ok = false;
    }
    return out;
}

// Discrete (separable) kernel matrices built directly in precision S:
// sum_n 2 c_n e^{8 k^3 t - 2 k x} (-2k)^d v_n v_n^T with v_n,i = sqrt(w_i) e^{-2 k s_i}.
template <class S>
std::vector<Mat<S>> discrete_matrices(const oracles::SolitonData& sol, Real x, Real t, const QuadratureHalfLine& quad,
                                      int max_dx) {
    using std::exp;
    using std::sqrt;
    const int n = quad.n;
    std::vector<Mat<S>> out(max_dx + 1, Mat<S>::Zero(n, n));
    for (std::size_t k = 0; k < sol.size(); ++k) {
        const S kap = S(sol.kappa[k]);
        Eigen::Matrix<S, Eigen::Dynamic, 1> v(n);
        for (int i = 0; i < n; ++i) v(i) = sqrt(S(quad.w[i])) * exp(-2 * kap * S(quad.s[i]));
        const S base = 2 * S(sol.c[k]) * exp(8 * kap * kap * kap * S(t) - 2 * kap * S(x));
        const Mat<S> outer = v * v.transpose();
        S f = base;
        for (int d = 0; d <= max_dx; ++d) {
            out[d] += f * outer;
            f *= -2 * kap;
        }
    }
    return out;
}

}  // namespace kdvist

#include <kdvist/hankel.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <sstream>

namespace kdvist {

NystromOperator discretize(const KernelFamily& kernel, Real x, Real t, const QuadratureHalfLine& quad, int max_dx,
                           bool with_dt, bool include_poles) {
    if (max_dx < 0 || max_dx > 3) throw ConfigError("discretize: max_dx must be in 0..3");
    NystromOperator op;
    op.quad = quad;
    op.x = x;
    op.t = t;
    auto mats = kernel.matrices(x, t, quad, max_dx, with_dt, include_poles);
    // Scale of I + M: the identity sets the floor.
    const Real scale = std::max<Real>(mats[0].cwiseAbs().maxCoeff(), 1);
    op.scale = scale;
    op.asymmetry = (mats[0] - mats[0].transpose()).cwiseAbs().maxCoeff() / scale;
    if (include_poles && op.asymmetry > 1e-12L) {
        std::ostringstream os;
        os << "Nystrom matrix asymmetry " << static_cast<double>(op.asymmetry) << " at x=" << static_cast<double>(x)
           << ", t=" << static_cast<double>(t) << " exceeds 1e-12: kernel bug";
        throw NumericalError(os.str());
    }
    for (auto& m : mats) m = (m + m.transpose()).eval() / 2;
    op.M = std::move(mats[0]);
    for (int d = 1; d <= max_dx; ++d) op.Mx.push_back(std::move(mats[d]));
    if (with_dt) {
        op.Mt = std::move(mats.back());
        op.has_t = true;
    }
    return op;
}

Real log_fredholm_det(const NystromOperator& op) {
    return dyson_terms<Real>(op.M, MatrixL(), MatrixL()).log_det;
}

Real fredholm_det(const NystromOperator& op) { return std::exp(log_fredholm_det(op)); }

Real log_det_dx2(const NystromOperator& op) {
    if (op.Mx.size() < 2) throw ConfigError("log_det_dx2: first and second x-derivative matrices are required");
    const auto r = dyson_terms<Real>(op.M, op.Mx[0], op.Mx[1]);
    if (r.cond_estimate > 1e12L) {
        std::ostringstream os;
        os << "I + M is ill-conditioned (condition ~ " << static_cast<double>(r.cond_estimate)
           << "); use the extended-precision solver path";
        throw NumericalError(os.str());
    }
    return r.d2;
}

SpectrumDiagnostics spectrum_diagnostics(const NystromOperator& op) {
    SpectrumDiagnostics d;
    if (op.M.size() == 0) return d;
    Eigen::SelfAdjointEigenSolver<MatrixL> es(op.M, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        d.eigenvalues.push_back(ev(i));
        d.singular_values.push_back(std::abs(ev(i)));
        d.nuclear_norm_estimate += std::abs(ev(i));
    }
    std::sort(d.singular_values.begin(), d.singular_values.end(), std::greater<>());
    d.min_eig = d.eigenvalues.front();
    return d;
}

}  // namespace kdvist

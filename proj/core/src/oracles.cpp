#include <kdvist/oracles.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kdvist::oracles {

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

void check(const SolitonData& data) {
    if (data.kappa.size() != data.c.size())
        throw ConfigError("soliton data: kappa and c differ in length");
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (!(data.kappa[n] > 0) || !(data.c[n] > 0))
            throw ConfigError("soliton data: kappa and c must be positive");
        for (std::size_t m = 0; m < n; ++m)
            if (data.kappa[n] == data.kappa[m]) throw ConfigError("soliton data: kappa values must be distinct");
    }
}

Real log_d(const SolitonData& data, std::size_t n, Real x, Real t) {
    const Real k = data.kappa[n];
    return std::log(data.c[n]) + 8 * k * k * k * t - 2 * k * x;
}

// Rescaled system B = E + F C F with det(I + G) = det(B) * prod_{d_n > 1} d_n.
struct Scaled {
    Mat B, B1, B2;
    Real log_prefactor = 0;
};

Scaled rescale(const SolitonData& data, Real x, Real t) {
    const auto N = static_cast<Eigen::Index>(data.size());
    Eigen::Matrix<Real, Eigen::Dynamic, 1> e(N), e1(N), e2(N), f(N), f1(N), f2(N);
    Scaled out;
    for (Eigen::Index n = 0; n < N; ++n) {
        const Real k = data.kappa[n];
        const Real ld = log_d(data, n, x, t);
        if (ld > 0) {
            e(n) = std::exp(-ld);
            e1(n) = 2 * k * e(n);
            e2(n) = 4 * k * k * e(n);
            f(n) = 1;
            f1(n) = 0;
            f2(n) = 0;
            out.log_prefactor += ld;
        } else {
            e(n) = 1;
            e1(n) = 0;
            e2(n) = 0;
            f(n) = std::exp(ld / 2);
            f1(n) = -k * f(n);
            f2(n) = k * k * f(n);
        }
    }
    out.B.resize(N, N);
    out.B1.resize(N, N);
    out.B2.resize(N, N);
    for (Eigen::Index n = 0; n < N; ++n) {
        for (Eigen::Index m = 0; m < N; ++m) {
            const Real c = 1 / (data.kappa[n] + data.kappa[m]);
            out.B(n, m) = f(n) * c * f(m);
            out.B1(n, m) = (f1(n) * f(m) + f(n) * f1(m)) * c;
            out.B2(n, m) = (f2(n) * f(m) + 2 * f1(n) * f1(m) + f(n) * f2(m)) * c;
        }
        out.B(n, n) += e(n);
        out.B1(n, n) += e1(n);
        out.B2(n, n) += e2(n);
    }
    return out;
}

}  // namespace

SolitonData SolitonData::from_positions(const std::vector<std::pair<Real, Real>>& kappa_x0) {
    auto terms = kappa_x0;
    std::sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.first > b.first; });
    SolitonData d;
    for (auto [k, x0] : terms) {
        d.kappa.push_back(k);
        d.c.push_back(2 * k * std::exp(2 * k * x0));
    }
    return d;
}

Real n_soliton_det(const SolitonData& data, Real x, Real t) {
    return std::exp(n_soliton_log_det(data, x, t));
}

Real n_soliton_log_det(const SolitonData& data, Real x, Real t) {
    check(data);
    if (data.size() == 0) return 0;
    const Scaled s = rescale(data, x, t);
    Eigen::LLT<Mat> llt(s.B);
    if (llt.info() != Eigen::Success) throw NumericalError("n_soliton_det: rescaled matrix not positive definite");
    Real ld = 0;
    for (Eigen::Index i = 0; i < s.B.rows(); ++i) ld += 2 * std::log(llt.matrixL()(i, i));
    return ld + s.log_prefactor;
}

Real n_soliton_field(const SolitonData& data, Real x, Real t) {
    check(data);
    if (data.size() == 0) return 0;
    const Scaled s = rescale(data, x, t);
    Eigen::LLT<Mat> llt(s.B);
    if (llt.info() != Eigen::Success) throw NumericalError("n_soliton_field: rescaled matrix not positive definite");
    const Mat P1 = llt.solve(s.B1);
    const Mat P2 = llt.solve(s.B2);
    const Real d2 = P2.trace() - (P1 * P1).trace();
    return -2 * d2;
}

Real pure_step_reflection(Real h, Real k) {
    const Real r = h / (std::abs(k) + std::sqrt(k * k + h * h));
    return -r * r;
}

Real pure_step_rho(Real h, Real s) {
    const Real w = std::max<Real>(0, h * h - s * s);
    return (h * h * h - w * std::sqrt(w)) / (3 * kPi * h * h);
}

PureStep pure_step_closed_forms(Real h, Real k_or_s) {
    if (!(h > 0)) throw ConfigError("pure_step_closed_forms: h must be positive");
    return {pure_step_reflection(h, k_or_s), pure_step_rho(h, k_or_s)};
}

Real soliton_phase_shift(const SolitonData& data, std::size_t n) {
    const Real kn = data.kappa.at(n);
    Real sum = 0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        if (m == n) continue;
        const Real km = data.kappa[m];
        const Real l = std::log(std::abs((kn + km) / (kn - km)));
        // Faster solitons are pushed ahead by slower ones and vice versa.
        sum += km < kn ? l : -l;
    }
    return sum / kn;
}

}  // namespace kdvist::oracles

#pragma once

#include <kdvist/types.hpp>

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace kdvist {

enum class PotentialKind { zero, soliton, n_soliton, pure_step, box, tabulated, sum, truncated };

// What a tabulated profile does outside its sample range. `none` makes any
// evaluation there an error.
enum class TailRule { none, zero, constant, power };

struct TailSpec {
    TailRule rule = TailRule::none;
    Real exponent = 0;  // only for TailRule::power: q ~ q_end * (x_end / x)^exponent
};

const char* to_string(PotentialKind kind);
const char* to_string(TailRule rule);
TailRule tail_rule_from_string(const std::string& name);

// Immutable step-type initial profile q(x). Cheap to copy (shared node).
class Potential {
public:
    Potential();  // zero

    static Potential zero();
    // -2 kappa^2 sech^2(kappa (x - x0)); norming constant 2 kappa e^{2 kappa x0}.
    static Potential soliton(Real kappa, Real x0);
    // Reflectionless profile with bound states kappa_n and norming constants
    // c_n = 2 kappa_n e^{2 kappa_n x0_n}.
    static Potential n_soliton(std::vector<std::pair<Real, Real>> kappa_x0);
    // -h^2 on x < 0, zero on x >= 0.
    static Potential pure_step(Real h);
    // `depth` on [left, right), zero elsewhere. depth < 0 is a well.
    static Potential box(Real depth, Real left, Real right);
    static Potential tabulated(std::vector<Real> xs, std::vector<Real> qs, TailSpec left, TailSpec right);
    static Potential sum(std::vector<Potential> terms);

    Real operator()(Real x) const;
    Real evaluate(Real x) const { return (*this)(x); }

    // Hard cut: zero for x < b, q(x) for x >= b.
    Potential truncate(Real b) const;

    PotentialKind kind() const;
    Real lower_bound_h() const;
    Real decay_alpha() const;
    // Numerically significant support. Either end may be infinite.
    std::pair<Real, Real> support() const;
    // True when q -> 0 at -infinity (ordinary decaying scattering data exists).
    bool left_decaying() const;
    // q is constant on (-infinity, left_constant_from()); -infinity when no such
    // point is known. Lets Riccati starts skip the far-field search.
    Real left_constant_from() const;
    // Points where q or its low derivatives jump; ODE integration restarts there.
    std::vector<Real> breakpoints() const;
    // Deterministic text identity used for cache keys and manifests.
    std::string fingerprint() const;

    // Soliton parameters for soliton / n_soliton kinds (empty otherwise).
    std::vector<std::pair<Real, Real>> soliton_terms() const;

    struct Node;

private:
    explicit Potential(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

struct HypothesisGrid {
    Real x_min = 0, x_max = 0;
    int n = 0;
    Real tail_start = 0, tail_end = 0;
    int tail_n = 0;
};

struct HypothesisReport {
    Real h_observed = 0;
    Real alpha_fit = 0;
    bool tail_zero = false;
    bool tail_indeterminate = false;
    bool bounded_below = true;
    bool pass = false;
    std::string message;
};

// Grid covering the support plus a right tail window, sized from the hints.
HypothesisGrid default_hypothesis_grid(const Potential& q);
HypothesisReport validate_hypothesis(const Potential& q, const HypothesisGrid& grid, Real tol = 1e-9L);
inline HypothesisReport validate_hypothesis(const Potential& q) {
    return validate_hypothesis(q, default_hypothesis_grid(q));
}

}  // namespace kdvist

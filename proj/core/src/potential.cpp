#include <kdvist/oracles.hpp>
#include <kdvist/potential.hpp>

#include <cmath>
// boost 1.74 pchip calls isnan unqualified, which misses long double.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace kdvist {

namespace {
constexpr Real kInf = std::numeric_limits<Real>::infinity();

std::string num(Real v) {
    std::ostringstream os;
    os << std::setprecision(21) << v;
    return os.str();
}
}  // namespace

struct Potential::Node {
    PotentialKind kind = PotentialKind::zero;
    Real p0 = 0, p1 = 0, p2 = 0;  // kind-specific scalars
    std::vector<std::pair<Real, Real>> solitons;
    oracles::SolitonData soliton_data;
    std::vector<Potential> children;
    // tabulated
    std::vector<Real> xs, qs;
    TailSpec left_tail, right_tail;
    std::shared_ptr<boost::math::interpolators::pchip<std::vector<Real>>> spline;

    Real h = 0;
    Real alpha = kInf;
    std::pair<Real, Real> support{0, 0};
    bool left_decay = true;
};

const char* to_string(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::soliton: return "soliton";
    case PotentialKind::n_soliton: return "n_soliton";
    case PotentialKind::pure_step: return "pure_step";
    case PotentialKind::box: return "box";
    case PotentialKind::tabulated: return "tabulated";
    case PotentialKind::sum: return "sum";
    case PotentialKind::truncated: return "truncated";
    }
    return "?";
}

const char* to_string(TailRule rule) {
    switch (rule) {
    case TailRule::none: return "none";
    case TailRule::zero: return "zero";
    case TailRule::constant: return "constant";
    case TailRule::power: return "power";
    }
    return "?";
}

TailRule tail_rule_from_string(const std::string& name) {
    if (name == "none") return TailRule::none;
    if (name == "zero") return TailRule::zero;
    if (name == "constant") return TailRule::constant;
    if (name == "power") return TailRule::power;
    throw ConfigError("unknown tail rule '" + name + "' (expected zero, constant, power or none)");
}

Potential::Potential() : Potential(zero()) {}

Potential::Potential(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Potential Potential::zero() {
    static const auto node = [] {
        auto n = std::make_shared<Node>();
        n->kind = PotentialKind::zero;
        return n;
    }();
    return Potential(node);
}

Potential Potential::soliton(Real kappa, Real x0) {
    if (!(kappa > 0)) throw ConfigError("soliton: kappa must be positive");
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::soliton;
    n->p0 = kappa;
    n->p1 = x0;
    n->solitons = {{kappa, x0}};
    n->h = std::sqrt(Real(2)) * kappa;
    // 2 kappa^2 sech^2 drops below 1e-17 kappa^2 at 22/kappa.
    n->support = {x0 - 22 / kappa, x0 + 22 / kappa};
    return Potential(n);
}

Potential Potential::n_soliton(std::vector<std::pair<Real, Real>> kappa_x0) {
    if (kappa_x0.empty()) return zero();
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::n_soliton;
    n->soliton_data = oracles::SolitonData::from_positions(kappa_x0);
    std::sort(kappa_x0.begin(), kappa_x0.end(), [](auto& a, auto& b) { return a.first > b.first; });
    n->solitons = kappa_x0;
    for (std::size_t i = 1; i < n->soliton_data.size(); ++i)
        if (n->soliton_data.kappa[i] == n->soliton_data.kappa[i - 1])
            throw ConfigError("n_soliton: kappa values must be distinct");
    Real kmin = kInf, lo = kInf, hi = -kInf, shift = 0;
    for (std::size_t i = 0; i < kappa_x0.size(); ++i) {
        auto [k, x0] = kappa_x0[i];
        if (!(k > 0)) throw ConfigError("n_soliton: kappa must be positive");
        kmin = std::min(kmin, k);
        lo = std::min(lo, x0);
        hi = std::max(hi, x0);
        shift += std::abs(oracles::soliton_phase_shift(n->soliton_data, i));
    }
    n->support = {lo - shift - 22 / kmin, hi + shift + 22 / kmin};
    Potential p(n);
    // Lower bound by dense sampling; the profile is smooth on the 1/kappa_max scale.
    const Real kmax = n->soliton_data.kappa.front();
    Real qmin = 0;
    const int samples = static_cast<int>((n->support.second - n->support.first) * kmax * 40) + 1;
    for (int i = 0; i <= samples; ++i) {
        const Real x = n->support.first + (n->support.second - n->support.first) * i / samples;
        qmin = std::min(qmin, p(x));
    }
    n->h = std::sqrt(-qmin) * Real(1.01);
    return p;
}

Potential Potential::pure_step(Real h) {
    if (!(h > 0)) throw ConfigError("pure_step: h must be positive");
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::pure_step;
    n->p0 = h;
    n->h = h;
    n->support = {-kInf, 0};
    n->left_decay = false;
    return Potential(n);
}

Potential Potential::box(Real depth, Real left, Real right) {
    if (!(right > left)) throw ConfigError("box: right must exceed left");
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::box;
    n->p0 = depth;
    n->p1 = left;
    n->p2 = right;
    n->h = std::sqrt(std::max<Real>(0, -depth));
    n->support = {left, right};
    return Potential(n);
}

Potential Potential::tabulated(std::vector<Real> xs, std::vector<Real> qs, TailSpec left, TailSpec right) {
    if (xs.size() != qs.size()) throw ConfigError("tabulated: x and q columns differ in length");
    if (xs.size() < 4) throw ConfigError("tabulated: need at least four samples");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ConfigError("tabulated: x must be strictly increasing");
    for (Real v : qs)
        if (!std::isfinite(v)) throw ConfigError("tabulated: non-finite sample");
    if (left.rule == TailRule::power || right.rule == TailRule::power) {
        for (const TailSpec* t : {&left, &right})
            if (t->rule == TailRule::power && !(std::isfinite(t->exponent) && t->exponent != 0))
                throw ConfigError("tabulated: power tail needs a finite nonzero exponent");
        if (left.rule == TailRule::power && xs.front() >= 0)
            throw ConfigError("tabulated: left power tail needs a negative first abscissa");
        if (right.rule == TailRule::power && xs.back() <= 0)
            throw ConfigError("tabulated: right power tail needs a positive last abscissa");
    }
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::tabulated;
    n->xs = xs;
    n->qs = qs;
    n->left_tail = left;
    n->right_tail = right;
    n->spline = std::make_shared<boost::math::interpolators::pchip<std::vector<Real>>>(std::move(xs), std::move(qs));

    const Real x0 = n->xs.front(), x1 = n->xs.back();
    const Real q0 = n->qs.front(), q1 = n->qs.back();
    Real qmin = *std::min_element(n->qs.begin(), n->qs.end());
    // pchip is monotone between knots, so sample minima bound the interpolant.
    Real lo = x0, hi = x1;
    switch (left.rule) {
    case TailRule::constant:
        n->left_decay = q0 == 0;
        if (q0 != 0) lo = -kInf;
        break;
    case TailRule::power:
        // A negative exponent grows toward -infinity; legal step-type data as long as it stays bounded below.
        if (left.exponent > 0) {
            lo = x0 * std::pow(std::max<Real>(std::abs(q0), 1e-300L) / 1e-17L, 1 / left.exponent);
        } else {
            lo = -kInf;
            n->left_decay = false;
        }
        break;
    default: break;
    }
    switch (right.rule) {
    case TailRule::constant:
        if (q1 != 0) {
            hi = kInf;
            n->alpha = 0;
        }
        break;
    case TailRule::power:
        hi = x1 * std::pow(std::max<Real>(std::abs(q1), 1e-300L) / 1e-17L, 1 / right.exponent);
        n->alpha = right.exponent;
        break;
    default: break;
    }
    n->support = {lo, hi};
    n->h = std::sqrt(std::max<Real>(0, -qmin));
    return Potential(n);
}

Potential Potential::sum(std::vector<Potential> terms) {
    if (terms.empty()) return zero();
    if (terms.size() == 1) return terms.front();
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::sum;
    Real h2 = 0;
    n->support = {kInf, -kInf};
    for (const auto& t : terms) {
        h2 += t.lower_bound_h() * t.lower_bound_h();
        n->alpha = std::min(n->alpha, t.decay_alpha());
        n->left_decay = n->left_decay && t.left_decaying();
        if (t.kind() == PotentialKind::zero) continue;
        n->support.first = std::min(n->support.first, t.support().first);
        n->support.second = std::max(n->support.second, t.support().second);
    }
    if (n->support.first > n->support.second) n->support = {0, 0};
    n->h = std::sqrt(h2);
    n->children = std::move(terms);
    return Potential(n);
}

Potential Potential::truncate(Real b) const {
    if (!std::isfinite(b)) throw ConfigError("truncate: b must be finite");
    const Node& self = *node_;
    if (self.kind == PotentialKind::zero) return *this;
    if (self.kind == PotentialKind::truncated) return self.children.front().truncate(std::max(b, self.p0));
    auto n = std::make_shared<Node>();
    n->kind = PotentialKind::truncated;
    n->p0 = b;
    n->children = {*this};
    n->h = self.h;
    n->alpha = self.alpha;
    n->left_decay = true;
    n->support = {std::max(b, self.support.first), self.support.second};
    if (n->support.first > n->support.second) n->support = {b, b};
    return Potential(n);
}

Real Potential::operator()(Real x) const {
    const Node& n = *node_;
    switch (n.kind) {
    case PotentialKind::zero: return 0;
    case PotentialKind::soliton: {
        const Real ch = std::cosh(n.p0 * (x - n.p1));
        return -2 * n.p0 * n.p0 / (ch * ch);
    }
    case PotentialKind::n_soliton: return oracles::n_soliton_field(n.soliton_data, x, 0);
    case PotentialKind::pure_step: return x < 0 ? -n.p0 * n.p0 : 0;
    case PotentialKind::box: return (x >= n.p1 && x < n.p2) ? n.p0 : 0;
    case PotentialKind::tabulated: {
        const Real x0 = n.xs.front(), x1 = n.xs.back();
        if (x >= x0 && x <= x1) return (*n.spline)(x);
        const bool left = x < x0;
        const TailSpec& tail = left ? n.left_tail : n.right_tail;
        const Real xe = left ? x0 : x1, qe = left ? n.qs.front() : n.qs.back();
        switch (tail.rule) {
        case TailRule::zero: return 0;
        case TailRule::constant: return qe;
        case TailRule::power: return qe * std::pow(xe / x, tail.exponent);
        case TailRule::none: break;
        }
        std::ostringstream os;
        os << "tabulated potential evaluated at x=" << num(x) << " outside [" << num(x0) << ", " << num(x1)
           << "] with no tail rule";
        throw ConfigError(os.str());
    }
    case PotentialKind::sum: {
        Real s = 0;
        for (const auto& c : n.children) s += c(x);
        return s;
    }
    case PotentialKind::truncated: return x < n.p0 ? 0 : n.children.front()(x);
    }
    return 0;
}

PotentialKind Potential::kind() const { return node_->kind; }
Real Potential::lower_bound_h() const { return node_->h; }
Real Potential::decay_alpha() const { return node_->alpha; }
std::pair<Real, Real> Potential::support() const { return node_->support; }
bool Potential::left_decaying() const { return node_->left_decay; }

Real Potential::left_constant_from() const {
    const Node& n = *node_;
    switch (n.kind) {
    case PotentialKind::zero: return kInf;
    case PotentialKind::soliton:
    case PotentialKind::n_soliton: return n.support.first;  // below 1e-17 from here on
    case PotentialKind::pure_step: return 0;
    case PotentialKind::box: return n.p1;
    case PotentialKind::tabulated:
        return (n.left_tail.rule == TailRule::zero || n.left_tail.rule == TailRule::constant) ? n.xs.front() : -kInf;
    case PotentialKind::sum: {
        Real v = kInf;
        for (const auto& c : n.children) v = std::min(v, c.left_constant_from());
        return v;
    }
    case PotentialKind::truncated: return n.p0;
    }
    return -kInf;
}

std::vector<std::pair<Real, Real>> Potential::soliton_terms() const { return node_->solitons; }

std::vector<Real> Potential::breakpoints() const {
    const Node& n = *node_;
    std::vector<Real> out;
    switch (n.kind) {
    case PotentialKind::pure_step: out = {0}; break;
    case PotentialKind::box: out = {n.p1, n.p2}; break;
    case PotentialKind::tabulated: out = {n.xs.front(), n.xs.back()}; break;
    case PotentialKind::sum:
        for (const auto& c : n.children) {
            auto b = c.breakpoints();
            out.insert(out.end(), b.begin(), b.end());
        }
        break;
    case PotentialKind::truncated: {
        out = n.children.front().breakpoints();
        out.erase(std::remove_if(out.begin(), out.end(), [&](Real v) { return v <= n.p0; }), out.end());
        out.push_back(n.p0);
        break;
    }
    default: break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string Potential::fingerprint() const {
    const Node& n = *node_;
    std::ostringstream os;
    os << to_string(n.kind) << '(';
    switch (n.kind) {
    case PotentialKind::soliton: os << num(n.p0) << ',' << num(n.p1); break;
    case PotentialKind::n_soliton:
        for (auto [k, x0] : n.solitons) os << '[' << num(k) << ',' << num(x0) << ']';
        break;
    case PotentialKind::pure_step: os << num(n.p0); break;
    case PotentialKind::box: os << num(n.p0) << ',' << num(n.p1) << ',' << num(n.p2); break;
    case PotentialKind::tabulated: {
        // FNV-1a over the raw sample bytes keeps the key short.
        std::uint64_t hash = 1469598103934665603ull;
        auto mix = [&](const std::vector<Real>& v) {
            for (Real r : v) {
                const double d = static_cast<double>(r);
                const auto* p = reinterpret_cast<const unsigned char*>(&d);
                for (std::size_t i = 0; i < sizeof d; ++i) hash = (hash ^ p[i]) * 1099511628211ull;
            }
        };
        mix(n.xs);
        mix(n.qs);
        os << n.xs.size() << ',' << std::hex << hash << std::dec << ',' << to_string(n.left_tail.rule) << ','
           << to_string(n.right_tail.rule);
        break;
    }
    case PotentialKind::sum:
        for (const auto& c : n.children) os << c.fingerprint() << ';';
        break;
    case PotentialKind::truncated: os << n.children.front().fingerprint() << ',' << num(n.p0); break;
    default: break;
    }
    os << ')';
    return os.str();
}

HypothesisGrid default_hypothesis_grid(const Potential& q) {
    auto [lo, hi] = q.support();
    if (!std::isfinite(lo)) lo = std::isfinite(hi) ? hi - 50 : -50;
    if (!std::isfinite(hi)) hi = lo + 100;
    if (hi <= lo) hi = lo + 1;
    HypothesisGrid g;
    g.x_min = lo - 5;
    g.x_max = hi + 5;
    g.n = 20001;
    g.tail_start = std::max<Real>(hi, 1);
    g.tail_end = 4 * g.tail_start + 20;
    g.tail_n = 400;
    return g;
}

HypothesisReport validate_hypothesis(const Potential& q, const HypothesisGrid& grid, Real tol) {
    HypothesisReport r;
    if (grid.n < 2 || !(grid.x_max > grid.x_min)) throw ConfigError("validate_hypothesis: empty grid");
    Real qmin = 0;
    for (int i = 0; i < grid.n; ++i) {
        const Real x = grid.x_min + (grid.x_max - grid.x_min) * i / (grid.n - 1);
        qmin = std::min(qmin, q(x));
    }
    r.h_observed = std::sqrt(-qmin);
    r.bounded_below = r.h_observed <= q.lower_bound_h() + tol;

    // Least-squares slope of log|q| against log x over the right tail.
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    bool any_nonzero = false;
    if (grid.tail_n >= 2 && grid.tail_end > grid.tail_start && grid.tail_start > 0) {
        const Real ratio = std::log(grid.tail_end / grid.tail_start);
        for (int i = 0; i < grid.tail_n; ++i) {
            const Real x = grid.tail_start * std::exp(ratio * i / (grid.tail_n - 1));
            const Real v = std::abs(q(x));
            if (v == 0) continue;
            any_nonzero = true;
            // Values at the underflow floor say nothing about the rate.
            if (v < 1e-280L) continue;
            const Real lx = std::log(x), ly = std::log(v);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++used;
        }
    }
    if (!any_nonzero && grid.tail_n >= 2) {
        r.tail_zero = true;
        r.alpha_fit = std::numeric_limits<Real>::infinity();
    } else if (used < 3) {
        r.tail_indeterminate = true;
        r.message = "tail indeterminate";
    } else {
        const Real slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
        r.alpha_fit = -slope;
    }
    const bool tail_ok = r.tail_zero || (!r.tail_indeterminate && r.alpha_fit > 4);
    r.pass = r.bounded_below && tail_ok;
    if (!r.bounded_below) {
        std::ostringstream os;
        os << "observed lower bound h=" << num(r.h_observed) << " exceeds declared h=" << num(q.lower_bound_h());
        r.message = os.str();
    } else if (!tail_ok && r.message.empty()) {
        std::ostringstream os;
        os << "right tail decays too slowly (alpha fit " << num(r.alpha_fit) << " <= 4)";
        r.message = os.str();
    }
    return r;
}

}  // namespace kdvist

#pragma once

// Exact evaluation of the generator of the environment seen from the walk,
//
//   Lf(xi) = sum_y [f(xi^{y,y+1}) - f(xi)] + (1 - lambda xi_0) [f(theta_1 xi) + f(theta_{-1} xi) - 2 f(xi)],
//
// on local functions over a finite window xi_{-W..W}, together with the
// correctors psi_n and phi_{n,l} and exhaustive checks of their generator
// identities. Everything is templated on the scalar: boost::rational gives
// exact residuals, double gives the fast path.
//
// Windows never assume values outside their radius: any read past +-W throws
// InsufficientWindow.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "ssepwalk/errors.hpp"
#include "ssepwalk/random.hpp"

namespace ssepwalk::oracle {

using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& q) {
    if (q.denominator() == 1) return std::to_string(q.numerator());
    return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

template <typename Scalar>
Scalar abs_value(const Scalar& x) {
    return x < Scalar(0) ? -x : x;
}

// Largest window radius whose 2W+1 sites may be enumerated exhaustively.
inline constexpr int kMaxEnumerationRadius = 12;

// Values xi_{-W..W} in {0,1}.
class WindowConfiguration {
public:
    explicit WindowConfiguration(int radius) : radius_(radius), values_(static_cast<std::size_t>(2 * radius + 1), 0) {
        if (radius < 1) throw Error("window radius must be positive");
    }

    // Site k in [-W, W] takes bit (k + W) of `mask`.
    static WindowConfiguration from_mask(int radius, std::uint64_t mask) {
        WindowConfiguration w(radius);
        w.assign_mask(mask);
        return w;
    }

    void assign_mask(std::uint64_t mask) noexcept {
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
    }

    int radius() const noexcept { return radius_; }
    int size() const noexcept { return 2 * radius_ + 1; }

    int at(int k) const {
        if (k < -radius_ || k > radius_) throw InsufficientWindow(std::abs(k), radius_);
        return values_[static_cast<std::size_t>(k + radius_)];
    }
    void set(int k, int v) {
        if (k < -radius_ || k > radius_) throw InsufficientWindow(std::abs(k), radius_);
        values_[static_cast<std::size_t>(k + radius_)] = static_cast<std::uint8_t>(v != 0);
    }

    const std::uint8_t* centre() const noexcept { return values_.data() + radius_; }

private:
    int radius_;
    std::vector<std::uint8_t> values_;
};

// Read-only view of a window, optionally shifted (theta_s) or with one bond
// exchanged (xi^{y,y+1}). Reads past the window throw InsufficientWindow.
class Xi {
public:
    explicit Xi(const WindowConfiguration& w) : centre_(w.centre()), radius_(w.radius()) {}

    int operator()(int k) const {
        int j = k + shift_;
        if (j == swap_lo_)
            j = swap_lo_ + 1;
        else if (j == swap_lo_ + 1)
            j = swap_lo_;
        if (j < -radius_ || j > radius_) throw InsufficientWindow(std::abs(j), radius_);
        return centre_[j];
    }

    // theta_s xi: (theta_s xi)_k = xi_{k+s}.
    Xi shifted(int s) const {
        Xi v = *this;
        v.shift_ += s;
        return v;
    }

    // xi^{y,y+1}. Only valid on an unshifted view.
    Xi swapped(int y) const {
        Xi v = *this;
        v.swap_lo_ = y;
        return v;
    }

    int radius() const noexcept { return radius_; }

private:
    const std::uint8_t* centre_;
    int radius_;
    int shift_ = 0;
    int swap_lo_ = std::numeric_limits<int>::min() / 2;
};

// A function of xi_{-r..r} only.
template <typename Scalar>
struct LocalFunction {
    int radius = 0;
    std::function<Scalar(const Xi&)> eval;

    Scalar operator()(const Xi& xi) const { return eval(xi); }
};

// The two parts of Lf at xi: the exclusion sum over bonds meeting the support
// [-r, r], and the bracket f(theta_1 xi) + f(theta_{-1} xi) - 2 f(xi) that the
// walk rate 1 - lambda xi_0 multiplies. The shifts read xi at +-(r+1).
template <typename Scalar>
struct GeneratorParts {
    Scalar exchange{0};
    Scalar shift{0};
    int xi0 = 0;

    Scalar combine(const Scalar& lambda) const { return exchange + (Scalar(1) - lambda * Scalar(xi0)) * shift; }
};

template <typename Scalar>
GeneratorParts<Scalar> generator_parts(const LocalFunction<Scalar>& f, const WindowConfiguration& window) {
    const int r = f.radius;
    if (window.radius() < r + 1) throw InsufficientWindow(r + 1, window.radius());
    const Xi xi(window);
    const Scalar fx = f(xi);
    GeneratorParts<Scalar> out;
    for (int y = -r - 1; y <= r; ++y) {
        if (xi(y) == xi(y + 1)) continue;  // xi^{y,y+1} == xi
        out.exchange += f(xi.swapped(y)) - fx;
    }
    out.shift = f(xi.shifted(1)) + f(xi.shifted(-1)) - Scalar(2) * fx;
    out.xi0 = xi(0);
    return out;
}

// Exact generator image of f at xi.
template <typename Scalar>
Scalar apply_generator(const LocalFunction<Scalar>& f, const WindowConfiguration& window, const Scalar& lambda) {
    return generator_parts(f, window).combine(lambda);
}

// xi_x as a local function.
template <typename Scalar>
LocalFunction<Scalar> site_function(int x) {
    return {std::abs(x), [x](const Xi& xi) { return Scalar(xi(x)); }};
}

template <typename Scalar>
LocalFunction<Scalar> constant_function(Scalar c) {
    return {0, [c](const Xi&) { return c; }};
}

// ---------------------------------------------------------------------------
// Correctors

enum class CorrectorKind { psi, phi };

struct CorrectorSpec {
    CorrectorKind kind = CorrectorKind::psi;
    int n = 1;
    int ell = 1;  // ignored by psi, which does not depend on it

    // Window radius needed to evaluate the corrector and its generator image.
    int required_radius() const noexcept { return kind == CorrectorKind::psi ? n + 1 : n + ell + 1; }
};

inline void check_corrector_args(int n, int ell) {
    if (n < 1) throw Error("corrector: n must be >= 1");
    if (ell < 1) throw Error("corrector: ell must be >= 1");
}

// -sum_{k=1}^{n} sum_{x=-k+1}^{k-1} (xi_x - rho). The inner sums are nested,
// so each one extends the previous by its two end sites; the integer part is
// summed first.
template <typename Scalar>
Scalar psi_value(int n, const Xi& xi, const Scalar& rho) {
    std::int64_t occupied = 0;
    std::int64_t inner = 0;
    for (int k = 1; k <= n; ++k) {
        inner += k == 1 ? xi(0) : xi(k - 1) + xi(-k + 1);
        occupied += inner;
    }
    const std::int64_t terms = static_cast<std::int64_t>(n) * n;  // sum_k (2k - 1)
    return -(Scalar(occupied) - Scalar(terms) * rho);
}

// sum_{j=0}^{l-1} ((l - j)/l) sum_{x=-n-j}^{n+j} xi_x, blocks grown in place.
template <typename Scalar>
Scalar phi_value(int n, int ell, const Xi& xi) {
    std::int64_t block = 0;
    for (int x = -n; x <= n; ++x) block += xi(x);
    std::int64_t weighted = static_cast<std::int64_t>(ell) * block;
    for (int j = 1; j < ell; ++j) {
        block += xi(-n - j) + xi(n + j);
        weighted += static_cast<std::int64_t>(ell - j) * block;
    }
    return Scalar(weighted) / Scalar(ell);
}

// a_k = sum_{j=k}^{l-1} (l - j)/l; zero for k >= l.
template <typename Scalar>
Scalar a_coefficient(int k, int ell) {
    Scalar a(0);
    for (int j = k; j < ell; ++j) a += Scalar(ell - j) / Scalar(ell);
    return a;
}

// phi through the a_k form: a_0 sum_{|j|<=n} xi_j + sum_{k=1}^{l-1} a_k (xi_{n+k} + xi_{-n-k}).
template <typename Scalar>
Scalar phi_value_ak(int n, int ell, const Xi& xi) {
    Scalar inner(0);
    for (int j = -n; j <= n; ++j) inner += Scalar(xi(j));
    Scalar out = a_coefficient<Scalar>(0, ell) * inner;
    for (int k = 1; k < ell; ++k) out += a_coefficient<Scalar>(k, ell) * Scalar(xi(n + k) + xi(-n - k));
    return out;
}

template <typename Scalar>
LocalFunction<Scalar> psi_function(int n, Scalar rho) {
    check_corrector_args(n, 1);
    return {n, [n, rho](const Xi& xi) { return psi_value<Scalar>(n, xi, rho); }};
}

template <typename Scalar>
LocalFunction<Scalar> phi_function(int n, int ell) {
    check_corrector_args(n, ell);
    return {n + ell, [n, ell](const Xi& xi) { return phi_value<Scalar>(n, ell, xi); }};
}

template <typename Scalar>
Scalar psi(const CorrectorSpec& spec, const WindowConfiguration& window, const Scalar& rho) {
    check_corrector_args(spec.n, 1);
    if (window.radius() < spec.n + 1) throw InsufficientWindow(spec.n + 1, window.radius());
    return psi_value<Scalar>(spec.n, Xi(window), rho);
}

template <typename Scalar>
Scalar phi(const CorrectorSpec& spec, const WindowConfiguration& window) {
    check_corrector_args(spec.n, spec.ell);
    if (window.radius() < spec.n + spec.ell + 1) throw InsufficientWindow(spec.n + spec.ell + 1, window.radius());
    return phi_value<Scalar>(spec.n, spec.ell, Xi(window));
}

// (xi_{x+1} + ... + xi_{x+l}) / l
template <typename Scalar>
Scalar right_average(const Xi& xi, int x, int ell) {
    std::int64_t s = 0;
    for (int i = 1; i <= ell; ++i) s += xi(x + i);
    return Scalar(s) / Scalar(ell);
}

// (xi_{x-1} + ... + xi_{x-l}) / l
template <typename Scalar>
Scalar left_average(const Xi& xi, int x, int ell) {
    std::int64_t s = 0;
    for (int i = 1; i <= ell; ++i) s += xi(x - i);
    return Scalar(s) / Scalar(ell);
}

// ---------------------------------------------------------------------------
// Exhaustive identity checks

inline void check_enumeration_budget(int radius) {
    if (radius > kMaxEnumerationRadius)
        throw EnumerationBudgetExceeded("EnumerationBudgetExceeded: 2W+1 = " + std::to_string(2 * radius + 1) +
                                        " sites exceeds the limit of " +
                                        std::to_string(2 * kMaxEnumerationRadius + 1));
}

// Calls visit(window) for every configuration of the window.
template <typename Visit>
void for_each_configuration(int radius, Visit&& visit) {
    check_enumeration_budget(radius);
    WindowConfiguration w(radius);
    const std::uint64_t count = std::uint64_t{1} << w.size();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        w.assign_mask(mask);
        visit(static_cast<const WindowConfiguration&>(w));
    }
}

// max |L psi_n - (2 - lambda xi_0)(2 xi_0 - xi_n - xi_{-n})| over all
// 2^{2W+1} configurations, one residual per lambda. The lambdas share one pass
// over the configurations.
template <typename Scalar>
std::vector<Scalar> check_psi_identity(int n, const std::vector<Scalar>& lambdas, const Scalar& rho, int radius) {
    check_corrector_args(n, 1);
    if (radius < n + 1) throw InsufficientWindow(n + 1, radius);
    const auto f = psi_function<Scalar>(n, rho);
    std::vector<Scalar> worst(lambdas.size(), Scalar(0));
    for_each_configuration(radius, [&](const WindowConfiguration& w) {
        const Xi xi(w);
        const auto parts = generator_parts(f, w);
        const int gradient = 2 * xi(0) - xi(n) - xi(-n);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const Scalar target = (Scalar(2) - lambdas[i] * Scalar(xi(0))) * Scalar(gradient);
            const Scalar residual = abs_value(parts.combine(lambdas[i]) - target);
            if (worst[i] < residual) worst[i] = residual;
        }
    });
    return worst;
}

template <typename Scalar>
Scalar check_psi_identity(int n, const Scalar& lambda, const Scalar& rho, int radius) {
    return check_psi_identity<Scalar>(n, std::vector<Scalar>{lambda}, rho, radius).front();
}

template <typename Scalar>
struct PhiIdentityResult {
    Scalar residual{0};           // max |L phi + (2 - lambda xi_0)(xi_n - ->xi_n + xi_{-n} - <-xi_{-n})|
    Scalar gradient_residual{0};  // max error of the two telescoped gradient expansions
    Scalar ak_residual{0};        // max |phi - phi via a_k|
};

// xi_x - ->xi_x^l = sum_{j<l} ((l-j)/l)(xi_{x+j} - xi_{x+j+1}), and its mirror
// xi_x - <-xi_x^l = sum_{j<l} ((l-j)/l)(xi_{x-j} - xi_{x-j-1}).
template <typename Scalar>
Scalar gradient_expansion_error(const Xi& xi, int x, int ell) {
    Scalar right(0);
    Scalar left(0);
    for (int j = 0; j < ell; ++j) {
        const Scalar w = Scalar(ell - j) / Scalar(ell);
        right += w * Scalar(xi(x + j) - xi(x + j + 1));
        left += w * Scalar(xi(-x - j) - xi(-x - j - 1));
    }
    const Scalar e1 = abs_value(Scalar(xi(x)) - right_average<Scalar>(xi, x, ell) - right);
    const Scalar e2 = abs_value(Scalar(xi(-x)) - left_average<Scalar>(xi, -x, ell) - left);
    return e1 < e2 ? e2 : e1;
}

// One result per lambda; the gradient and a_k sub-checks do not involve
// lambda and are shared.
template <typename Scalar>
std::vector<PhiIdentityResult<Scalar>> check_phi_identity(int n, int ell, const std::vector<Scalar>& lambdas,
                                                          int radius) {
    check_corrector_args(n, ell);
    if (radius < n + ell + 1) throw InsufficientWindow(n + ell + 1, radius);
    const auto f = phi_function<Scalar>(n, ell);
    std::vector<PhiIdentityResult<Scalar>> out(lambdas.size());
    Scalar gradient_worst(0);
    Scalar ak_worst(0);
    auto raise = [](Scalar& slot, const Scalar& v) {
        if (slot < v) slot = v;
    };
    for_each_configuration(radius, [&](const WindowConfiguration& w) {
        const Xi xi(w);
        const auto parts = generator_parts(f, w);
        const Scalar gradient = Scalar(xi(n)) - right_average<Scalar>(xi, n, ell) + Scalar(xi(-n)) -
                                left_average<Scalar>(xi, -n, ell);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const Scalar target = -(Scalar(2) - lambdas[i] * Scalar(xi(0))) * gradient;
            raise(out[i].residual, abs_value(parts.combine(lambdas[i]) - target));
        }
        raise(gradient_worst, gradient_expansion_error<Scalar>(xi, n, ell));
        raise(ak_worst, abs_value(phi_value<Scalar>(n, ell, xi) - phi_value_ak<Scalar>(n, ell, xi)));
    });
    for (auto& r : out) {
        r.gradient_residual = gradient_worst;
        r.ak_residual = ak_worst;
    }
    return out;
}

template <typename Scalar>
PhiIdentityResult<Scalar> check_phi_identity(int n, int ell, const Scalar& lambda, int radius) {
    return check_phi_identity<Scalar>(n, ell, std::vector<Scalar>{lambda}, radius).front();
}

struct IncrementBoundsReport {
    std::size_t configurations = 0;
    bool swap_bound = true;            // [phi(xi^{x,x+1}) - phi(xi)]^2 <= l for every bond
    bool swap_coefficient_bound = true;  // ... <= (a_k - a_{k+1})^2, k = distance of the bond's inner site beyond n
    bool shift_bound = true;           // [phi(theta_1 xi) - phi(xi)]^2 <= (2 a_0)^2
    bool psi_shift_identity = true;    // psi(xi) - psi(theta_1 xi) == sum_{k=1}^n xi_k - sum_{k=-n+1}^0 xi_k
    bool magnitude_bound = true;       // |phi(xi)| <= sum_j ((l-j)/l)(2n + 2j + 1)

    bool all() const noexcept {
        return swap_bound && swap_coefficient_bound && shift_bound && psi_shift_identity && magnitude_bound;
    }
};

// Increment and size bounds of the correctors, checked in exact arithmetic on
// `samples` uniformly drawn window configurations (radius W >= n + l + 1).
inline IncrementBoundsReport check_increment_bounds(int n, int ell, int radius, std::size_t samples,
                                                    RandomStream& stream, Rational rho = Rational(1, 2)) {
    using Q = Rational;
    check_corrector_args(n, ell);
    if (radius < n + ell + 1) throw InsufficientWindow(n + ell + 1, radius);
    if (radius > 31) throw EnumerationBudgetExceeded("check_increment_bounds: window radius above 31");

    std::vector<Q> a(static_cast<std::size_t>(ell) + 1);
    for (int k = 0; k <= ell; ++k) a[static_cast<std::size_t>(k)] = a_coefficient<Q>(k, ell);
    Q magnitude_cap(0);
    for (int j = 0; j < ell; ++j) magnitude_cap += Q(ell - j, ell) * Q(2 * n + 2 * j + 1);
    const Q shift_cap = Q(4) * a[0] * a[0];

    IncrementBoundsReport report;
    WindowConfiguration w(radius);
    const std::uint64_t mask_limit = (std::uint64_t{1} << w.size()) - 1;
    for (std::size_t s = 0; s < samples; ++s) {
        w.assign_mask(stream() & mask_limit);
        const Xi xi(w);
        const Q base = phi_value<Q>(n, ell, xi);
        for (int x = -radius; x < radius; ++x) {
            const Q diff = phi_value<Q>(n, ell, xi.swapped(x)) - base;
            const Q sq = diff * diff;
            if (Q(ell) < sq) report.swap_bound = false;
            const int inner = std::min(std::abs(x), std::abs(x + 1));
            const int k = inner - n;
            const Q cap = (k >= 0 && k < ell) ? (a[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k) + 1]) *
                                                    (a[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k) + 1])
                                              : Q(0);
            if (cap < sq) report.swap_coefficient_bound = false;
        }
        const Q shift_diff = phi_value<Q>(n, ell, xi.shifted(1)) - base;
        if (shift_cap < shift_diff * shift_diff) report.shift_bound = false;

        std::int64_t right = 0;
        std::int64_t left = 0;
        for (int k = 1; k <= n; ++k) right += xi(k);
        for (int k = -n + 1; k <= 0; ++k) left += xi(k);
        if (psi_value<Q>(n, xi, rho) - psi_value<Q>(n, xi.shifted(1), rho) != Q(right - left))
            report.psi_shift_identity = false;

        if (magnitude_cap < abs_value(base)) report.magnitude_bound = false;
        ++report.configurations;
    }
    return report;
}

}  // namespace ssepwalk::oracle

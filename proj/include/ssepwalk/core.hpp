#pragma once

// Shared domain types, parameter validation and the closed-form limits of the
// walk: the limiting occupation fraction and the limiting diffusivity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "ssepwalk/errors.hpp"

namespace ssepwalk {

// Density of the exclusion process and slowdown of the walk on particles.
// The walk jumps to each neighbour at rate 1 - lambda * occupancy.
struct ModelParams {
    double rho = 0.5;
    double lambda = 1.0;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

    // Per-neighbour jump rate on a site with occupancy `occ`.
    double jump_rate(int occ) const noexcept { return 1.0 - lambda * occ; }
};

// Periodic lattice of L sites; bond b joins sites b and (b + 1) mod L.
struct LatticeSpec {
    std::int64_t L = 4096;

    friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

    std::int64_t wrap(std::int64_t x) const noexcept {
        const std::int64_t r = x % L;
        return r < 0 ? r + L : r;
    }
    std::int64_t right(std::int64_t site) const noexcept { return site + 1 == L ? 0 : site + 1; }
    std::int64_t left(std::int64_t site) const noexcept { return site == 0 ? L - 1 : site - 1; }
};

// Default torus size for horizon T: max(4096, smallest even integer >= 16 sqrt(T)).
inline LatticeSpec default_lattice(double T) {
    auto needed = static_cast<std::int64_t>(std::ceil(16.0 * std::sqrt(std::max(T, 0.0))));
    if (needed % 2 != 0) ++needed;
    return LatticeSpec{std::max<std::int64_t>(4096, needed)};
}

namespace detail {
inline std::string to_text(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace detail

inline void validate(const ModelParams& params) {
    // NaN fails both comparisons, so it is rejected too.
    if (!(params.rho >= 0.0 && params.rho <= 1.0)) throw OutOfRange("rho", detail::to_text(params.rho));
    if (!(params.lambda >= 0.0 && params.lambda <= 1.0))
        throw OutOfRange("lambda", detail::to_text(params.lambda));
}

inline void validate(const LatticeSpec& lattice) {
    if (lattice.L < 4 || lattice.L % 2 != 0) throw OutOfRange("L", std::to_string(lattice.L));
}

// Throws OutOfRange naming the first offending field.
inline void validate(const ModelParams& params, const LatticeSpec& lattice) {
    validate(params);
    validate(lattice);
}

struct TheoreticalTargets {
    double sigma_sq = 2.0;
    double occ_limit = 0.0;
};

// occ_limit = 2 rho / (2 - lambda + lambda rho);
// sigma_sq  = 2 - 4 lambda rho / (2 - lambda (1 - rho)).
// The denominators are >= 1 on the valid parameter square.
inline TheoreticalTargets theoretical_targets(const ModelParams& params) {
    validate(params);
    const double rho = params.rho;
    const double lambda = params.lambda;
    TheoreticalTargets out;
    out.occ_limit = 2.0 * rho / (2.0 - lambda + lambda * rho);
    out.sigma_sq = 2.0 - 4.0 * lambda * rho / (2.0 - lambda * (1.0 - rho));
    return out;
}

}  // namespace ssepwalk

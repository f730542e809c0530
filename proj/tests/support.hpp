#pragma once

// Independent oracles used by the unit and acceptance tests. Nothing here calls
// into the code it checks beyond the plain data types.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/rational.hpp>

#include "ssepwalk/ssep.hpp"
#include "ssepwalk/walk.hpp"

namespace testsupport {

using ssepwalk::EnvironmentEventLog;
using ssepwalk::ModelParams;
using ssepwalk::WalkJump;

struct Recomputed {
    double occ = 0.0;
    double qv = 0.0;
    double y = 0.0;
    std::int64_t x = 0;
};

// Walks the merged event/jump sequence on a plain occupancy vector and sums
// the three integrals segment by segment (environment first at equal times).
inline Recomputed recompute_integrals(const EnvironmentEventLog& log, const std::vector<WalkJump>& jumps,
                                      const ModelParams& p) {
    const std::int64_t L = log.lattice.L;
    std::vector<int> occ(static_cast<std::size_t>(L));
    for (std::int64_t i = 0; i < L; ++i) occ[static_cast<std::size_t>(i)] = log.initial[i];
    auto site_of = [L](std::int64_t x) { return ((x % L) + L) % L; };
    Recomputed out;
    double last = 0.0;
    auto segment = [&](double until) {
        const double xi = occ[static_cast<std::size_t>(site_of(out.x))];
        const double dt = until - last;
        out.occ += xi * dt;
        out.qv += (2.0 - 2.0 * p.lambda * xi) * dt;
        out.y += (2.0 - p.lambda * xi) * (xi - p.rho) * dt;
        last = until;
    };
    std::size_t e = 0;
    std::size_t j = 0;
    while (e < log.events.size() || j < jumps.size()) {
        const bool env_next = j == jumps.size() || (e < log.events.size() && log.events[e].time <= jumps[j].time);
        if (env_next) {
            const auto& ev = log.events[e++];
            segment(ev.time);
            const auto b = static_cast<std::size_t>(ev.bond);
            const auto c = static_cast<std::size_t>((ev.bond + 1) % L);
            std::swap(occ[b], occ[c]);
        } else {
            segment(jumps[j].time);
            out.x += jumps[j++].direction;
        }
    }
    segment(log.horizon);
    return out;
}

// ---------------------------------------------------------------------------
// Joint generator at walker position 0, written against plain arrays.

using Q = boost::rational<std::int64_t>;

// Configuration on sites -R..R stored at index k + R.
struct Config {
    int R = 0;
    std::vector<int> v;
    int at(int k) const { return v.at(static_cast<std::size_t>(k + R)); }
};

using ArrayFunction = std::function<Q(const Config&, int shift)>;  // f(theta_shift eta)

// sum over every bond (y, y+1) inside the window of [g(eta^{y,y+1}, 0) - g(eta, 0)]
// + (1 - lambda eta_0) [g(eta, 1) + g(eta, -1) - 2 g(eta, 0)], g(eta, x) = f(theta_x eta).
inline Q joint_generator_at_origin(const ArrayFunction& f, const Config& eta, const Q& lambda) {
    const Q g0 = f(eta, 0);
    Q total(0);
    for (int y = -eta.R; y < eta.R; ++y) {
        Config swapped = eta;
        std::swap(swapped.v[static_cast<std::size_t>(y + eta.R)], swapped.v[static_cast<std::size_t>(y + 1 + eta.R)]);
        total += f(swapped, 0) - g0;
    }
    total += (Q(1) - lambda * Q(eta.at(0))) * (f(eta, 1) + f(eta, -1) - Q(2) * g0);
    return total;
}

// -sum_{k=1}^{n} sum_{x=-k+1}^{k-1} (eta_{x+s} - rho), term by term.
inline ArrayFunction psi_array(int n, Q rho) {
    return [n, rho](const Config& c, int s) {
        Q total(0);
        for (int k = 1; k <= n; ++k)
            for (int x = -k + 1; x <= k - 1; ++x) total -= Q(c.at(x + s)) - rho;
        return total;
    };
}

// sum_{j=0}^{l-1} ((l-j)/l) sum_{x=-n-j}^{n+j} eta_{x+s}, term by term.
inline ArrayFunction phi_array(int n, int ell) {
    return [n, ell](const Config& c, int s) {
        Q total(0);
        for (int j = 0; j < ell; ++j)
            for (int x = -n - j; x <= n + j; ++x) total += Q(ell - j, ell) * Q(c.at(x + s));
        return total;
    };
}

inline Config config_from_mask(int R, std::uint64_t mask) {
    Config c;
    c.R = R;
    c.v.resize(static_cast<std::size_t>(2 * R + 1));
    for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = static_cast<int>((mask >> i) & 1U);
    return c;
}

// ---------------------------------------------------------------------------
// Moments of a rate-2 free walk: J ~ Poisson(mu) fair +-1 steps.

// E[S_j^6] for j fair +-1 steps, by summing over the binomial law.
inline double sixth_moment_of_steps(int j) {
    double total = 0.0;
    double log_choose = 0.0;  // log C(j, k)
    for (int k = 0; k <= j; ++k) {
        if (k > 0) log_choose += std::log(static_cast<double>(j - k + 1)) - std::log(static_cast<double>(k));
        const double s = 2.0 * k - j;
        total += std::exp(log_choose - j * std::log(2.0)) * std::pow(s, 6);
    }
    return total;
}

// E[X^6] with X the position after Poisson(mu) fair steps (series summed to
// negligible remainder).
inline double poisson_walk_sixth_moment(double mu) {
    const int jmax = static_cast<int>(mu + 40.0 * std::sqrt(mu) + 60.0);
    double total = 0.0;
    for (int j = 0; j <= jmax; ++j) {
        const double logp = -mu + j * std::log(mu) - std::lgamma(j + 1.0);
        total += std::exp(logp) * sixth_moment_of_steps(j);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Jump-count law of a walk on a frozen torus configuration.

// P(N_T = k), k = 0..kmax, by integrating the forward equation of the chain
// (position, jumps so far) with classical RK4. Jumps past kmax are dropped.
inline std::vector<double> frozen_jump_count_law(const std::vector<int>& eta, double lambda, double T, int kmax,
                                                 int steps) {
    const int L = static_cast<int>(eta.size());
    const std::size_t n = static_cast<std::size_t>(L) * static_cast<std::size_t>(kmax + 1);
    auto idx = [&](int x, int k) { return static_cast<std::size_t>(k) * static_cast<std::size_t>(L) + static_cast<std::size_t>(x); };
    auto deriv = [&](const std::vector<double>& p) {
        std::vector<double> d(n, 0.0);
        for (int k = 0; k <= kmax; ++k)
            for (int x = 0; x < L; ++x) {
                const double rate = 1.0 - lambda * eta[static_cast<std::size_t>(x)];
                const double mass = p[idx(x, k)];
                d[idx(x, k)] -= 2.0 * rate * mass;
                if (k < kmax) {
                    d[idx((x + 1) % L, k + 1)] += rate * mass;
                    d[idx((x + L - 1) % L, k + 1)] += rate * mass;
                }
            }
        return d;
    };
    std::vector<double> p(n, 0.0);
    p[idx(0, 0)] = 1.0;
    const double h = T / steps;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = deriv(p);
        std::vector<double> tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        const auto k2 = deriv(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        const auto k3 = deriv(tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + h * k3[i];
        const auto k4 = deriv(tmp);
        for (std::size_t i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    std::vector<double> law(static_cast<std::size_t>(kmax + 1), 0.0);
    for (int k = 0; k <= kmax; ++k)
        for (int x = 0; x < L; ++x) law[static_cast<std::size_t>(k)] += p[idx(x, k)];
    return law;
}

struct ChiSquare {
    double statistic = 0.0;
    int dof = 0;
    double critical = 0.0;  // upper quantile at the requested level
    bool pass() const { return statistic <= critical; }
};

// Pearson chi-square of observed counts against probabilities; adjacent cells
// are pooled until every expected count is at least 5.
inline ChiSquare chi_square(const std::vector<double>& probs, const std::vector<std::size_t>& counts, double alpha) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    std::vector<double> exp_cells;
    std::vector<double> obs_cells;
    double e_acc = 0.0;
    double o_acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        e_acc += probs[i] * total;
        o_acc += static_cast<double>(counts[i]);
        if (e_acc >= 5.0) {
            exp_cells.push_back(e_acc);
            obs_cells.push_back(o_acc);
            e_acc = o_acc = 0.0;
        }
    }
    if (!exp_cells.empty()) {
        exp_cells.back() += e_acc;
        obs_cells.back() += o_acc;
    }
    ChiSquare out;
    for (std::size_t i = 0; i < exp_cells.size(); ++i)
        out.statistic += (obs_cells[i] - exp_cells[i]) * (obs_cells[i] - exp_cells[i]) / exp_cells[i];
    out.dof = static_cast<int>(exp_cells.size()) - 1;
    out.critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(out.dof), alpha));
    return out;
}

}  // namespace testsupport

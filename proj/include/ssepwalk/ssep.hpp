#pragma once

// Rate-1 stirring exclusion process on the periodic lattice.
//
// Clock mechanism: rings of all bonds are superposed into one Poisson process
// of rate L (Exp(L) gaps), each ring picking a uniform bond. Only rings across
// bonds with differing occupancies change the state; only those are logged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ssepwalk/core.hpp"
#include "ssepwalk/lattice.hpp"
#include "ssepwalk/random.hpp"
#include "ssepwalk/stats.hpp"

namespace ssepwalk {

struct SwapEvent {
    double time = 0.0;
    std::int64_t bond = 0;

    friend bool operator==(const SwapEvent&, const SwapEvent&) = default;
};

// Initial configuration plus the time-ordered effective swaps on [0, T].
struct EnvironmentEventLog {
    LatticeSpec lattice;
    double rho = 0.0;
    double horizon = 0.0;
    SeedSpec seed;
    LatticeConfiguration initial;
    std::vector<SwapEvent> events;

    friend bool operator==(const EnvironmentEventLog&, const EnvironmentEventLog&) = default;
};

// I.i.d. Bernoulli(rho) sites, drawn in site order.
inline LatticeConfiguration init_stationary(double rho, const LatticeSpec& lattice, RandomStream& stream) {
    validate(ModelParams{rho, 0.0}, lattice);
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(lattice.L));
    for (auto& site : occ) site = stream.uniform() < rho;
    return LatticeConfiguration(std::move(occ));
}

namespace detail {

// Drives the ring process: next_ring() advances to the following ring time.
class RingClock {
public:
    RingClock(std::int64_t L, RandomStream& stream)
        : L_(static_cast<std::uint64_t>(L)), inv_rate_(1.0 / static_cast<double>(L)), stream_(stream) {}

    double next_time(double t) { return t + stream_.exponential() * inv_rate_; }
    std::int64_t bond() noexcept { return static_cast<std::int64_t>(stream_.below(L_)); }

private:
    std::uint64_t L_;
    double inv_rate_;
    RandomStream& stream_;
};

}  // namespace detail

// Runs the exclusion process from `initial` up to time T and records every
// effective swap. `final_state`, when given, receives the state at T.
inline EnvironmentEventLog generate_log(const LatticeConfiguration& initial, double rho, double T,
                                        RandomStream& stream, LatticeConfiguration* final_state = nullptr) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error("generate_log: horizon must be finite and >= 0");
    EnvironmentEventLog log;
    log.lattice = LatticeSpec{initial.size()};
    validate(log.lattice);
    log.rho = rho;
    log.horizon = T;
    log.seed = stream.seed();
    log.initial = initial;

    LatticeConfiguration state = initial;
    if (T > 0.0 && initial.particle_count() != 0 && initial.particle_count() != initial.size()) {
        // Expected effective swaps: (discordant bonds) * T, roughly 2 rho (1 - rho) L T.
        const double expected = 2.0 * rho * (1.0 - rho) * static_cast<double>(initial.size()) * T;
        log.events.reserve(static_cast<std::size_t>(std::min(expected * 1.05 + 64.0, 5e8)));
    }
    detail::RingClock clock(initial.size(), stream);
    // An empty or full lattice never changes.
    const bool frozen = initial.particle_count() == 0 || initial.particle_count() == initial.size();
    for (double t = frozen ? T + 1.0 : clock.next_time(0.0); t <= T; t = clock.next_time(t)) {
        const auto b = clock.bond();
        if (state.swap_bond(b)) log.events.push_back({t, b});
    }
    if (final_state != nullptr) *final_state = std::move(state);
    return log;
}

// Replays the log up to and including time t.
inline LatticeConfiguration state_at(const EnvironmentEventLog& log, double t) {
    if (!(t >= 0.0) || t > log.horizon)
        throw OutOfHorizon("state_at: t=" + detail::to_text(t) + " outside [0, " + detail::to_text(log.horizon) + "]");
    LatticeConfiguration state = log.initial;
    for (const auto& ev : log.events) {
        if (ev.time > t) break;
        state.swap_bond(ev.bond);
    }
    return state;
}

// Checks the structural log invariants: strictly increasing times inside
// [0, T], bonds in range, and every event effective when replayed.
inline bool log_is_consistent(const EnvironmentEventLog& log) {
    if (log.initial.size() != log.lattice.L || !log.initial.consistent()) return false;
    LatticeConfiguration state = log.initial;
    double prev = -1.0;
    for (const auto& ev : log.events) {
        if (!(ev.time > prev) || ev.time < 0.0 || ev.time > log.horizon) return false;
        if (ev.bond < 0 || ev.bond >= log.lattice.L) return false;
        if (!state.swap_bond(ev.bond)) return false;
        prev = ev.time;
    }
    return true;
}

struct StationarityProbe {
    stats::MeanCI density;     // time-averaged occupancy of site 0
    stats::MeanCI covariance;  // time-averaged (eta_0 - rho)(eta_1 - rho)
};

// Replicated check that Bernoulli(rho) product measure is preserved: per
// replica, the time averages over [0, T] of eta_0 and of
// (eta_0 - rho)(eta_1 - rho); intervals are at the 99% level across replicas.
inline StationarityProbe stationarity_probe(const ModelParams& params, const LatticeSpec& lattice, double T,
                                            std::size_t replicas, std::uint64_t master_seed) {
    validate(params, lattice);
    if (!(T > 0.0)) throw Error("stationarity_probe: T must be positive");
    if (replicas < 2) throw TooFewSamples(replicas, 2);
    const double rho = params.rho;
    std::vector<double> density(replicas);
    std::vector<double> cov(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
        RandomStream stream(environment_seed(master_seed, r));
        auto state = init_stationary(rho, lattice, stream);
        detail::RingClock clock(lattice.L, stream);
        double last = 0.0;
        double occ_int = 0.0;
        double cov_int = 0.0;
        auto integrate = [&](double until) {
            const double dt = until - last;
            occ_int += state[0] * dt;
            cov_int += (state[0] - rho) * (state[1] - rho) * dt;
            last = until;
        };
        for (double t = clock.next_time(0.0); t <= T; t = clock.next_time(t)) {
            const auto b = clock.bond();
            // Only bonds touching sites 0 or 1 move the probed observables.
            if (b == lattice.L - 1 || b == 0 || b == 1) integrate(t);
            state.swap_bond(b);
        }
        integrate(T);
        density[r] = occ_int / T;
        cov[r] = cov_int / T;
    }
    return {stats::mean_ci(density, 0.99), stats::mean_ci(cov, 0.99)};
}

}  // namespace ssepwalk

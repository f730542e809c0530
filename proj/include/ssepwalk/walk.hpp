#pragma once

// Variable-speed walk driven by the exclusion process.
//
// The walk is simulated by thinning: proposals arrive at rate 2 and a proposal
// at time s is accepted with probability 1 - lambda * xi_0(s-), the direction
// being a fair coin. Between breakpoints (accepted jumps and effective swaps
// on the two bonds touching the walker) xi_0 is constant, so the integrals
//
//   occ = int xi_0 ds,   qv = int (2 - 2 lambda xi_0) ds,
//   y   = int (2 - lambda xi_0)(xi_0 - rho) ds
//
// are accumulated exactly, segment by segment.
//
// Two drivers produce identical output for identical streams:
//   simulate_joint  streams the environment and the walk in one pass;
//   simulate_walk   replays the walk on a stored EnvironmentEventLog.
// Both consume the environment stream as init_stationary then generate_log,
// and the walk stream as: Exp(1) gap, then per proposal one uniform for
// acceptance and, on acceptance, one coin for the direction. At equal times an
// environment swap is applied before a walk proposal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ssepwalk/core.hpp"
#include "ssepwalk/lattice.hpp"
#include "ssepwalk/random.hpp"
#include "ssepwalk/ssep.hpp"

namespace ssepwalk {

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

// Exact piecewise-constant integrals of the environment seen by the walk.
class FunctionalAccumulator {
public:
    FunctionalAccumulator() = default;
    explicit FunctionalAccumulator(const ModelParams& params) : lambda_(params.lambda), rho_(params.rho) {}

    // Adds a segment of length dt during which xi_0 == occ.
    void advance(double dt, int occ) noexcept {
        const double xi = occ;
        elapsed_.add(dt);
        occ_.add(xi * dt);
        qv_.add((2.0 - 2.0 * lambda_ * xi) * dt);
        y_.add((2.0 - lambda_ * xi) * (xi - rho_) * dt);
    }

    double elapsed() const noexcept { return elapsed_.value(); }
    double occ_integral() const noexcept { return occ_.value(); }
    double qv_integral() const noexcept { return qv_.value(); }
    double y_integral() const noexcept { return y_.value(); }

private:
    double lambda_ = 0.0;
    double rho_ = 0.0;
    detail::CompensatedSum elapsed_;
    detail::CompensatedSum occ_;
    detail::CompensatedSum qv_;
    detail::CompensatedSum y_;
};

struct WalkJump {
    double time = 0.0;
    int direction = 0;  // +1 or -1

    friend bool operator==(const WalkJump&, const WalkJump&) = default;
};

struct WalkRealization {
    std::vector<WalkJump> jumps;  // empty unless the path was recorded
    double final_time = 0.0;
    std::int64_t x_final = 0;     // position lifted to Z
    std::int64_t max_abs_x = 0;
    std::int64_t jump_count = 0;
    bool winding = false;         // max |X| reached L/2

    friend bool operator==(const WalkRealization&, const WalkRealization&) = default;
};

// Throws WindingOverflow when the realization cannot stand in for the walk on Z.
inline void require_unwound(const WalkRealization& walk) {
    if (walk.winding)
        throw WindingOverflow("walk reached |X| = " + std::to_string(walk.max_abs_x) + " >= L/2");
}

// N_T - <X>_T: the compensated jump count, a mean-zero martingale at T.
inline double martingale_residual(const WalkRealization& walk, const FunctionalAccumulator& acc) {
    return static_cast<double>(walk.jump_count) - acc.qv_integral();
}

// The environment re-centred at the walker: xi(k) = eta((x + k) mod L).
class EnvironmentView {
public:
    EnvironmentView(const LatticeConfiguration& eta, std::int64_t x) : eta_(&eta), x_(x) {}
    int xi(std::int64_t k) const noexcept {
        const std::int64_t L = eta_->size();
        std::int64_t s = (x_ + k) % L;
        if (s < 0) s += L;
        return (*eta_)[s];
    }
    std::int64_t position() const noexcept { return x_; }

private:
    const LatticeConfiguration* eta_;
    std::int64_t x_;
};

struct WalkOptions {
    bool record_path = false;
};

struct JointOptions {
    bool keep_log = false;
    bool record_path = false;
};

struct JointResult {
    std::optional<EnvironmentEventLog> log;
    WalkRealization walk;
    FunctionalAccumulator acc;
};

namespace detail {

// Walk bookkeeping shared by both drivers so their arithmetic is identical.
class WalkState {
public:
    WalkState(const ModelParams& params, std::int64_t L, bool record_path)
        : L_(L), record_path_(record_path), acc_(params) {}

    std::int64_t site() const noexcept { return site_; }

    void breakpoint(double t, int xi0) noexcept {
        acc_.advance(t - last_, xi0);
        last_ = t;
    }

    void jump(double t, int xi0, int dir) {
        breakpoint(t, xi0);
        x_ += dir;
        site_ = dir > 0 ? (site_ + 1 == L_ ? 0 : site_ + 1) : (site_ == 0 ? L_ - 1 : site_ - 1);
        ++count_;
        max_abs_ = std::max(max_abs_, std::abs(x_));
        if (record_path_) jumps_.push_back({t, dir});
    }

    void finish(double T, int xi0, WalkRealization& walk, FunctionalAccumulator& acc) {
        breakpoint(T, xi0);
        walk.jumps = std::move(jumps_);
        walk.final_time = T;
        walk.x_final = x_;
        walk.max_abs_x = max_abs_;
        walk.jump_count = count_;
        walk.winding = 2 * max_abs_ >= L_;
        acc = acc_;
    }

private:
    std::int64_t L_;
    bool record_path_;
    FunctionalAccumulator acc_;
    std::vector<WalkJump> jumps_;
    double last_ = 0.0;
    std::int64_t x_ = 0;
    std::int64_t site_ = 0;
    std::int64_t max_abs_ = 0;
    std::int64_t count_ = 0;
};

// Draws one thinned proposal; returns 0 if rejected, else the direction.
inline int propose(const ModelParams& params, int xi0, RandomStream& walk) {
    if (!(walk.uniform() < params.jump_rate(xi0))) return 0;
    return walk.coin() ? 1 : -1;
}

inline double next_proposal(double t, RandomStream& walk) { return t + walk.exponential() * 0.5; }

}  // namespace detail

// Per-bond event times of a log, for O(log n) occupancy queries at the walker.
class EnvironmentIndex {
public:
    explicit EnvironmentIndex(const EnvironmentEventLog& log) : log_(&log) {
        const auto L = static_cast<std::size_t>(log.lattice.L);
        offsets_.assign(L + 1, 0);
        for (const auto& ev : log.events) ++offsets_[static_cast<std::size_t>(ev.bond) + 1];
        for (std::size_t b = 0; b < L; ++b) offsets_[b + 1] += offsets_[b];
        times_.resize(log.events.size());
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (const auto& ev : log.events) times_[fill[static_cast<std::size_t>(ev.bond)]++] = ev.time;
    }

    const EnvironmentEventLog& log() const noexcept { return *log_; }

    // Number of events on bond b with time <= t.
    std::size_t count_through(std::int64_t b, double t) const noexcept {
        const auto times = bond_times(b);
        return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    }

    // First event time on bond b strictly after t, or +inf.
    double next_after(std::int64_t b, double t) const noexcept {
        const auto times = bond_times(b);
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        return it == times.end() ? std::numeric_limits<double>::infinity() : *it;
    }

    // Occupancy of `site` after all events with time <= t. Every logged event
    // is effective, so each event on an adjacent bond flips the site.
    int occupancy(std::int64_t site, double t) const noexcept {
        const auto& lat = log_->lattice;
        const auto flips = count_through(lat.left(site), t) + count_through(site, t);
        return log_->initial[site] ^ static_cast<int>(flips & 1U);
    }

private:
    std::span<const double> bond_times(std::int64_t b) const noexcept {
        const auto i = static_cast<std::size_t>(b);
        return {times_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    const EnvironmentEventLog* log_;
    std::vector<std::size_t> offsets_;
    std::vector<double> times_;
};

// Replays the walk on an indexed environment. params.rho must equal the log's density.
inline std::pair<WalkRealization, FunctionalAccumulator> simulate_walk(const EnvironmentIndex& index,
                                                                       const ModelParams& params,
                                                                       RandomStream& walk_stream,
                                                                       WalkOptions options = {}) {
    const auto& log = index.log();
    validate(params, log.lattice);
    if (params.rho != log.rho) throw Error("simulate_walk: params.rho differs from the log's density");
    const double T = log.horizon;
    const auto& lat = log.lattice;

    detail::WalkState state(params, lat.L, options.record_path);
    WalkRealization walk;
    FunctionalAccumulator acc;
    if (T <= 0.0) {
        state.finish(0.0, log.initial[0], walk, acc);
        return {std::move(walk), acc};
    }

    // Events at the walker with time <= env_cursor have been applied.
    double env_cursor = -1.0;
    auto next_env = [&](std::int64_t site) {
        return std::min(index.next_after(lat.left(site), env_cursor), index.next_after(site, env_cursor));
    };
    int xi0 = log.initial[0];
    double te = next_env(0);
    double tp = detail::next_proposal(0.0, walk_stream);
    for (;;) {
        if (te <= tp && te <= T) {
            state.breakpoint(te, xi0);
            xi0 ^= 1;
            env_cursor = te;
            te = next_env(state.site());
        } else if (tp <= T) {
            if (const int dir = detail::propose(params, xi0, walk_stream); dir != 0) {
                state.jump(tp, xi0, dir);
                xi0 = index.occupancy(state.site(), tp);
                env_cursor = tp;
                te = next_env(state.site());
            }
            tp = detail::next_proposal(tp, walk_stream);
        } else {
            break;
        }
    }
    state.finish(T, xi0, walk, acc);
    return {std::move(walk), acc};
}

inline std::pair<WalkRealization, FunctionalAccumulator> simulate_walk(const EnvironmentEventLog& log,
                                                                       const ModelParams& params,
                                                                       RandomStream& walk_stream,
                                                                       WalkOptions options = {}) {
    const EnvironmentIndex index(log);
    return simulate_walk(index, params, walk_stream, options);
}

// Environment and walk in one streaming pass. Without keep_log nothing but the
// current configuration is stored.
inline JointResult simulate_joint(const ModelParams& params, const LatticeSpec& lattice, double T,
                                  RandomStream& env_stream, RandomStream& walk_stream, JointOptions options = {}) {
    validate(params, lattice);
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error("simulate_joint: horizon must be finite and >= 0");

    const auto initial = init_stationary(params.rho, lattice, env_stream);
    JointResult result;
    if (options.keep_log) {
        auto& log = result.log.emplace();
        log.lattice = lattice;
        log.rho = params.rho;
        log.horizon = T;
        log.seed = env_stream.seed();
        log.initial = initial;
    }
    detail::WalkState state(params, lattice.L, options.record_path);
    if (T == 0.0) {
        state.finish(0.0, initial[0], result.walk, result.acc);
        return result;
    }

    std::vector<std::uint8_t> occ = initial.bits();
    const std::int64_t L = lattice.L;
    detail::RingClock clock(L, env_stream);
    std::vector<SwapEvent>* events = options.keep_log ? &result.log->events : nullptr;

    int xi0 = occ[0];
    const bool frozen = initial.particle_count() == 0 || initial.particle_count() == L;
    double tr = frozen ? std::numeric_limits<double>::infinity() : clock.next_time(0.0);
    double tp = detail::next_proposal(0.0, walk_stream);
    for (;;) {
        if (tr <= tp) {
            if (tr > T) break;
            const std::int64_t b = clock.bond();
            const std::int64_t c = b + 1 == L ? 0 : b + 1;
            const std::uint8_t ob = occ[static_cast<std::size_t>(b)];
            const std::uint8_t oc = occ[static_cast<std::size_t>(c)];
            const std::int64_t site = state.site();
            if ((b == site || c == site) && ob != oc) {
                state.breakpoint(tr, xi0);
                xi0 ^= 1;
            }
            if (events != nullptr && ob != oc) events->push_back({tr, b});
            occ[static_cast<std::size_t>(b)] = oc;
            occ[static_cast<std::size_t>(c)] = ob;
            tr = clock.next_time(tr);
        } else {
            if (tp > T) break;
            if (const int dir = detail::propose(params, xi0, walk_stream); dir != 0) {
                state.jump(tp, xi0, dir);
                xi0 = occ[static_cast<std::size_t>(state.site())];
            }
            tp = detail::next_proposal(tp, walk_stream);
        }
    }
    state.finish(T, xi0, result.walk, result.acc);
    return result;
}

// One per-run CSV row.
struct RunRecord {
    std::uint64_t replica_id = 0;
    std::uint64_t env_id = 0;
    double T = 0.0;
    std::int64_t x_final = 0;
    std::int64_t jump_count = 0;
    std::int64_t max_abs_x = 0;
    double occ_integral = 0.0;
    double qv_integral = 0.0;
    double y_integral = 0.0;
    bool winding = false;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline RunRecord make_record(std::uint64_t replica_id, std::uint64_t env_id, const WalkRealization& walk,
                             const FunctionalAccumulator& acc) {
    return {replica_id,          env_id,          walk.final_time, walk.x_final, walk.jump_count, walk.max_abs_x,
            acc.occ_integral(), acc.qv_integral(), acc.y_integral(), walk.winding};
}

}  // namespace ssepwalk

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ssepwalk/event_log_io.hpp"
#include "ssepwalk/stats.hpp"
#include "ssepwalk/walk.hpp"
#include "support.hpp"

using namespace ssepwalk;

namespace {

struct Pipeline {
    EnvironmentEventLog log;
    WalkRealization walk;
    FunctionalAccumulator acc;
};

// Two-phase pipeline with the same stream assignment as the joint driver.
Pipeline two_phase(const ModelParams& p, std::int64_t L, double T, std::uint64_t seed, std::uint64_t id,
                   bool record = true) {
    RandomStream env(environment_seed(seed, id));
    RandomStream walk(walk_seed(seed, id));
    Pipeline out;
    const auto init = init_stationary(p.rho, LatticeSpec{L}, env);
    out.log = generate_log(init, p.rho, T, env);
    auto [w, a] = simulate_walk(out.log, p, walk, WalkOptions{record});
    out.walk = std::move(w);
    out.acc = a;
    return out;
}

JointResult joint(const ModelParams& p, std::int64_t L, double T, std::uint64_t seed, std::uint64_t id,
                  JointOptions opt = {}) {
    RandomStream env(environment_seed(seed, id));
    RandomStream walk(walk_seed(seed, id));
    return simulate_joint(p, LatticeSpec{L}, T, env, walk, opt);
}

}  // namespace

TEST(Walk, FrozenByFullLatticeAndFullSlowdown) {
    const auto r = joint({1.0, 1.0}, 64, 100.0, 1, 0);
    EXPECT_EQ(r.walk.jump_count, 0);
    EXPECT_EQ(r.walk.x_final, 0);
    EXPECT_EQ(r.acc.qv_integral(), 0.0);
    EXPECT_EQ(r.acc.occ_integral(), 100.0);
    EXPECT_EQ(martingale_residual(r.walk, r.acc), 0.0);
}

TEST(Walk, EmptyLatticeGivesExactIntegrals) {
    const auto r = joint({0.0, 0.7}, 64, 123.5, 2, 0);
    EXPECT_EQ(r.acc.occ_integral(), 0.0);
    EXPECT_EQ(r.acc.qv_integral(), 2.0 * 123.5);
}

TEST(Walk, ZeroHorizonIsEmpty) {
    const auto r = joint({0.5, 0.5}, 64, 0.0, 3, 0, {true, true});
    EXPECT_EQ(r.walk.jump_count, 0);
    EXPECT_TRUE(r.walk.jumps.empty());
    EXPECT_EQ(r.acc.occ_integral(), 0.0);
    EXPECT_EQ(r.acc.qv_integral(), 0.0);
    EXPECT_EQ(r.acc.y_integral(), 0.0);
    ASSERT_TRUE(r.log.has_value());
    EXPECT_TRUE(r.log->events.empty());
}

TEST(Walk, FreeWalkJumpsAtRateTwo) {
    constexpr double T = 100.0;
    constexpr int R = 200;
    double sum = 0.0;
    for (int r = 0; r < R; ++r) sum += static_cast<double>(joint({0.5, 0.0}, 256, T, 4, r).walk.jump_count);
    // Mean of R Poisson(2T) counts.
    EXPECT_NEAR(sum / R, 2.0 * T, 5.0 * std::sqrt(2.0 * T / R));
}

TEST(Walk, JointEqualsTwoPhaseBitForBit) {
    for (const ModelParams p : {ModelParams{0.5, 1.0}, ModelParams{0.25, 0.5}, ModelParams{0.9, 0.3}, ModelParams{0.5, 0.0}}) {
        for (std::uint64_t id = 0; id < 5; ++id) {
            const auto a = two_phase(p, 128, 60.0, 11, id);
            const auto b = joint(p, 128, 60.0, 11, id, {true, true});
            ASSERT_TRUE(b.log.has_value());
            EXPECT_EQ(*b.log, a.log);
            EXPECT_EQ(b.walk, a.walk);
            EXPECT_EQ(b.acc.occ_integral(), a.acc.occ_integral());
            EXPECT_EQ(b.acc.qv_integral(), a.acc.qv_integral());
            EXPECT_EQ(b.acc.y_integral(), a.acc.y_integral());
        }
    }
}

TEST(Walk, StreamingWithoutLogMatches) {
    const auto a = joint({0.5, 1.0}, 256, 80.0, 12, 3, {false, false});
    const auto b = joint({0.5, 1.0}, 256, 80.0, 12, 3, {true, false});
    EXPECT_FALSE(a.log.has_value());
    EXPECT_EQ(a.walk, b.walk);
    EXPECT_EQ(make_record(0, 0, a.walk, a.acc), make_record(0, 0, b.walk, b.acc));
}

TEST(Walk, ReplayFromSerializedLogMatches) {
    const auto a = joint({0.3, 0.8}, 128, 40.0, 13, 1, {true, false});
    const auto log = event_log_from_string(event_log_to_string(*a.log));
    RandomStream walk(walk_seed(13, 1));
    const auto [w, acc] = simulate_walk(log, {0.3, 0.8}, walk);
    EXPECT_EQ(make_record(1, 1, w, acc), make_record(1, 1, a.walk, a.acc));
}

TEST(Walk, RejectsDensityMismatch) {
    const auto a = two_phase({0.5, 1.0}, 64, 5.0, 1, 0);
    RandomStream walk(walk_seed(1, 0));
    EXPECT_THROW(simulate_walk(a.log, {0.4, 1.0}, walk), Error);
}

TEST(Walk, PerRunInvariants) {
    for (const ModelParams p : {ModelParams{0.5, 1.0}, ModelParams{0.25, 0.5}, ModelParams{0.75, 0.9}}) {
        for (std::uint64_t id = 0; id < 10; ++id) {
            constexpr double T = 150.0;
            const auto r = two_phase(p, 256, T, 21, id);
            const auto& w = r.walk;
            std::int64_t sum = 0;
            double prev = 0.0;
            for (const auto& j : w.jumps) {
                EXPECT_TRUE(j.direction == 1 || j.direction == -1);
                EXPECT_GT(j.time, prev);
                EXPECT_LE(j.time, T);
                prev = j.time;
                sum += j.direction;
            }
            EXPECT_EQ(sum, w.x_final);
            EXPECT_EQ(static_cast<std::int64_t>(w.jumps.size()), w.jump_count);
            EXPECT_EQ((w.x_final % 2 + 2) % 2, w.jump_count % 2);
            EXPECT_GE(w.max_abs_x, std::abs(w.x_final));

            const double occ = r.acc.occ_integral();
            EXPECT_GE(occ, 0.0);
            EXPECT_LE(occ, T + 1e-9);
            EXPECT_NEAR(r.acc.elapsed(), T, 1e-12 * T);
            EXPECT_NEAR(r.acc.qv_integral(), 2.0 * T - 2.0 * p.lambda * occ, 1e-12 * T);
            EXPECT_NEAR(r.acc.y_integral(), (2.0 - p.lambda + p.lambda * p.rho) * occ - 2.0 * p.rho * T, 1e-12 * T);
        }
    }
}

TEST(Walk, AccumulatorsMatchPostHocRecomputation) {
    for (const ModelParams p : {ModelParams{0.5, 1.0}, ModelParams{0.4, 0.6}}) {
        for (std::uint64_t id = 0; id < 8; ++id) {
            const auto r = two_phase(p, 128, 100.0, 31, id);
            const auto rc = testsupport::recompute_integrals(r.log, r.walk.jumps, p);
            EXPECT_EQ(rc.x, r.walk.x_final);
            EXPECT_NEAR(rc.occ, r.acc.occ_integral(), 1e-9);
            EXPECT_NEAR(rc.qv, r.acc.qv_integral(), 1e-9);
            EXPECT_NEAR(rc.y, r.acc.y_integral(), 1e-9);
        }
    }
}

TEST(Walk, EnvironmentViewRecentres) {
    LatticeConfiguration c;
    ASSERT_TRUE(LatticeConfiguration::from_bits("10010000", c));
    const EnvironmentView v(c, -5);  // site 3
    EXPECT_EQ(v.xi(0), 1);
    EXPECT_EQ(v.xi(-3), 1);
    EXPECT_EQ(v.xi(5), 1);  // site 0 again, one lap over
    EXPECT_EQ(v.xi(1), 0);
}

TEST(Walk, WindingIsFlaggedNotHidden) {
    // L = 4 and a free walk for a long time must wrap.
    const auto r = joint({0.5, 0.0}, 4, 50.0, 41, 0);
    EXPECT_TRUE(r.walk.winding);
    EXPECT_THROW(require_unwound(r.walk), WindingOverflow);
    const auto ok = joint({0.5, 0.0}, 4096, 5.0, 41, 0);
    EXPECT_FALSE(ok.walk.winding);
    EXPECT_NO_THROW(require_unwound(ok.walk));
}

TEST(Walk, MeanZeroAndIsometry) {
    constexpr double T = 100.0;
    constexpr int R = 400;
    std::vector<double> x, x2, qv, d;
    for (int r = 0; r < R; ++r) {
        const auto res = joint({0.5, 1.0}, 4096, T, 51, r);
        const double xf = static_cast<double>(res.walk.x_final);
        x.push_back(xf);
        x2.push_back(xf * xf);
        qv.push_back(res.acc.qv_integral());
        d.push_back(xf * xf - res.acc.qv_integral());
    }
    const auto mx = stats::mean_ci(x);
    EXPECT_LE(std::abs(mx.mean), 4.0 * mx.se);
    const auto md = stats::mean_ci(d);
    EXPECT_LE(std::abs(md.mean), 4.0 * md.se);
}

TEST(MartingaleResidual, MeanZeroAtModerateSlowdown) {
    constexpr int R = 500;
    std::vector<double> m;
    for (int r = 0; r < R; ++r) {
        const auto res = joint({0.5, 0.5}, 4096, 500.0, 61, r);
        m.push_back(martingale_residual(res.walk, res.acc));
    }
    const auto ci = stats::mean_ci(m);
    EXPECT_LE(std::abs(ci.mean), 4.0 * ci.se);
}

TEST(MartingaleResidual, PoissonCaseOnEmptyLattice) {
    constexpr int R = 500;
    constexpr double T = 200.0;
    std::vector<double> m;
    for (int r = 0; r < R; ++r) {
        const auto res = joint({0.0, 0.5}, 64, T, 62, r);
        EXPECT_EQ(martingale_residual(res.walk, res.acc), static_cast<double>(res.walk.jump_count) - 2.0 * T);
        m.push_back(martingale_residual(res.walk, res.acc));
    }
    const auto ci = stats::mean_ci(m);
    EXPECT_LE(std::abs(ci.mean), 4.0 * ci.se);
}

TEST(Walk, ThinningMatchesFrozenEnvironmentLaw) {
    // A log without swap events freezes the environment; the jump count then
    // follows the law of a walk with site-dependent rates 1 - lambda eta_x.
    EnvironmentEventLog log;
    log.lattice = LatticeSpec{8};
    log.rho = 0.5;
    log.horizon = 5.0;
    ASSERT_TRUE(LatticeConfiguration::from_bits("11010010", log.initial));
    const ModelParams p{0.5, 0.6};
    const std::vector<int> eta = {1, 1, 0, 1, 0, 0, 1, 0};
    constexpr int kMax = 45;
    const auto law = testsupport::frozen_jump_count_law(eta, p.lambda, log.horizon, kMax, 5000);
    double mass = 0.0;
    for (double q : law) mass += q;
    ASSERT_NEAR(mass, 1.0, 1e-9);

    const EnvironmentIndex index(log);
    std::vector<std::size_t> counts(kMax + 1, 0);
    constexpr int R = 20000;
    for (int r = 0; r < R; ++r) {
        RandomStream s(walk_seed(71, r));
        const auto [w, acc] = simulate_walk(index, p, s);
        ASSERT_LE(w.jump_count, kMax);
        ++counts[static_cast<std::size_t>(w.jump_count)];
    }
    const auto chi = testsupport::chi_square(law, counts, 0.001);
    EXPECT_TRUE(chi.pass()) << "chi2 " << chi.statistic << " dof " << chi.dof << " critical " << chi.critical;
}

TEST(EnvironmentIndex, OccupancyMatchesStateAt) {
    const auto a = two_phase({0.5, 1.0}, 64, 20.0, 81, 0);
    const EnvironmentIndex index(a.log);
    RandomStream u({82, 0});
    for (int i = 0; i < 50; ++i) {
        const double t = u.uniform() * 20.0;
        const auto st = state_at(a.log, t);
        for (std::int64_t site = 0; site < 64; ++site) ASSERT_EQ(index.occupancy(site, t), st[site]);
    }
}

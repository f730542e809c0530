#pragma once

// Replicated experiments: annealed and quenched estimates of the limit
// quantities, plus Monte-Carlo probes of the convergence rate, the sixth
// moment of the walk and the lateral decoupling of the environment.
//
// Stream assignment (master seed m):
//   annealed replica r             env stream r,          walk stream 2^32 + r
//   quenched env e, walk w         env stream e,          walk stream 2^32 + e W + w
//   probe grid point g, replica r  env stream g R + r,    walk stream 2^32 + g R + r
// Replicas may run on several threads; results are folded in replica order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssepwalk/core.hpp"
#include "ssepwalk/detail/parallel.hpp"
#include "ssepwalk/random.hpp"
#include "ssepwalk/ssep.hpp"
#include "ssepwalk/stats.hpp"
#include "ssepwalk/walk.hpp"

namespace ssepwalk {

enum class ExperimentMode { annealed, quenched };

struct ExperimentPlan {
    ModelParams params;
    LatticeSpec lattice;
    double T = 1000.0;
    std::size_t replicas = 100;        // annealed mode
    ExperimentMode mode = ExperimentMode::annealed;
    std::size_t environments = 0;      // quenched mode
    std::size_t walks_per_env = 0;     // quenched mode
    std::uint64_t master_seed = 0;
    std::vector<double> t_grid;        // rate and moment probes
    unsigned threads = 1;              // 0 = hardware concurrency
};

inline void validate(const ExperimentPlan& plan) {
    validate(plan.params, plan.lattice);
    if (!(plan.T > 0.0) || !std::isfinite(plan.T)) throw InvalidPlan("InvalidPlan: T must be positive and finite");
    if (plan.mode == ExperimentMode::annealed && plan.replicas < 2)
        throw InvalidPlan("InvalidPlan: at least 2 replicas are needed for intervals");
    if (plan.mode == ExperimentMode::quenched && (plan.environments < 2 || plan.walks_per_env < 2))
        throw InvalidPlan("InvalidPlan: quenched mode needs at least 2 environments and 2 walks per environment");
}

enum class Verdict { pass, fail, not_applicable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        default: return "n/a";
    }
}

struct QuantityEstimate {
    std::string quantity;
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;  // 99%
    double ci_hi = 0.0;
    std::optional<double> target;
    double tolerance = 0.0;  // absolute; the target may also pass within it
    Verdict verdict = Verdict::not_applicable;
};

inline QuantityEstimate make_estimate(std::string name, double estimate, double se, std::optional<double> target,
                                      double tolerance = 0.0) {
    QuantityEstimate q;
    q.quantity = std::move(name);
    q.estimate = estimate;
    q.se = se;
    q.ci_lo = estimate - stats::kZ99 * se;
    q.ci_hi = estimate + stats::kZ99 * se;
    q.target = target;
    q.tolerance = tolerance;
    if (target) {
        const bool in_ci = *target >= q.ci_lo && *target <= q.ci_hi;
        const bool in_tol = std::abs(estimate - *target) <= tolerance;
        q.verdict = in_ci || in_tol ? Verdict::pass : Verdict::fail;
    }
    return q;
}

struct EstimateReport {
    ModelParams params;
    LatticeSpec lattice;
    double T = 0.0;
    std::uint64_t master_seed = 0;
    std::size_t replicas = 0;
    std::size_t winding_count = 0;  // runs excluded from every estimate
    TheoreticalTargets targets;
    std::vector<QuantityEstimate> entries;
    stats::KsResult ks;             // X_T / sqrt(sigma^2 T) against N(0,1)
    std::vector<RunRecord> runs;    // every run, excluded ones included

    const QuantityEstimate& at(const std::string& name) const {
        for (const auto& e : entries)
            if (e.quantity == name) return e;
        throw Error("no estimate named " + name);
    }
};

namespace detail {

inline std::vector<RunRecord> run_annealed_records(const ModelParams& params, const LatticeSpec& lattice, double T,
                                                   std::size_t replicas, std::uint64_t master, std::uint64_t first_id,
                                                   unsigned threads) {
    std::vector<RunRecord> records(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
        const std::uint64_t id = first_id + r;
        RandomStream env(environment_seed(master, id));
        RandomStream walk(walk_seed(master, id));
        const auto res = simulate_joint(params, lattice, T, env, walk);
        records[r] = make_record(id, id, res.walk, res.acc);
    });
    return records;
}

inline std::vector<const RunRecord*> usable(const std::vector<RunRecord>& runs) {
    std::vector<const RunRecord*> out;
    for (const auto& r : runs)
        if (!r.winding) out.push_back(&r);
    return out;
}

template <typename F>
std::vector<double> column(const std::vector<const RunRecord*>& runs, F&& f) {
    std::vector<double> out;
    out.reserve(runs.size());
    for (const auto* r : runs) out.push_back(f(*r));
    return out;
}

}  // namespace detail

// Sample variance with a delta-method standard error sqrt((m4 - s^4) / n).
inline std::pair<double, double> variance_with_se(std::span<const double> xs) {
    const auto s = stats::summarize(xs);
    double m4 = 0.0;
    for (double x : xs) {
        const double d = x - s.mean;
        m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(s.n);
    const double var = s.variance;
    return {var, std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(s.n))};
}

// Builds the report from finished runs (used by run_annealed and by tools
// that load rows from disk).
inline EstimateReport summarize_annealed(const ModelParams& params, const LatticeSpec& lattice, double T,
                                         std::uint64_t master_seed, std::vector<RunRecord> runs) {
    EstimateReport report;
    report.params = params;
    report.lattice = lattice;
    report.T = T;
    report.master_seed = master_seed;
    report.replicas = runs.size();
    report.targets = theoretical_targets(params);
    report.runs = std::move(runs);

    const auto ok = detail::usable(report.runs);
    report.winding_count = report.runs.size() - ok.size();
    if (ok.size() < 2) throw TooFewSamples(ok.size(), 2);

    const double sigma_sq = report.targets.sigma_sq;
    const auto occ = detail::column(ok, [&](const RunRecord& r) { return r.occ_integral / T; });
    const auto qv = detail::column(ok, [&](const RunRecord& r) { return r.qv_integral / T; });
    const auto x = detail::column(ok, [](const RunRecord& r) { return static_cast<double>(r.x_final); });
    const auto x6 = detail::column(ok, [&](const RunRecord& r) { return std::pow(static_cast<double>(r.x_final), 6) / (T * T * T); });
    const auto comp = detail::column(ok, [](const RunRecord& r) { return static_cast<double>(r.jump_count) - r.qv_integral; });

    const auto occ_ci = stats::mean_ci(occ);
    const auto qv_ci = stats::mean_ci(qv);
    const auto x_ci = stats::mean_ci(x);
    const auto x6_ci = stats::mean_ci(x6);
    const auto comp_ci = stats::mean_ci(comp);
    const auto [var_x, var_se] = variance_with_se(x);

    report.entries.push_back(make_estimate("occupation_fraction", occ_ci.mean, occ_ci.se, report.targets.occ_limit));
    report.entries.push_back(make_estimate("qv_over_T", qv_ci.mean, qv_ci.se, sigma_sq));
    report.entries.push_back(make_estimate("var_X_over_T", var_x / T, var_se / T, sigma_sq));
    report.entries.push_back(make_estimate("mean_X", x_ci.mean, x_ci.se, 0.0));
    report.entries.push_back(make_estimate("compensated_jumps", comp_ci.mean, comp_ci.se, 0.0));
    report.entries.push_back(make_estimate("sixth_moment_ratio", x6_ci.mean, x6_ci.se, std::nullopt));

    if (sigma_sq > 0.0 && x.size() >= 20) {
        std::vector<double> z(x.size());
        const double scale = std::sqrt(sigma_sq * T);
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] / scale;
        report.ks = stats::ks_normal(z);
    }
    return report;
}

// R independent joint simulations.
inline EstimateReport run_annealed(const ExperimentPlan& plan) {
    validate(plan);
    if (plan.mode != ExperimentMode::annealed) throw InvalidPlan("InvalidPlan: run_annealed needs annealed mode");
    auto runs = detail::run_annealed_records(plan.params, plan.lattice, plan.T, plan.replicas, plan.master_seed, 0,
                                             plan.threads);
    return summarize_annealed(plan.params, plan.lattice, plan.T, plan.master_seed, std::move(runs));
}

struct EnvironmentSummary {
    std::uint64_t env_id = 0;
    std::size_t walks = 0;
    double occ_mean = 0.0;  // quenched mean of occ/T
    double occ_se = 0.0;    // within-environment standard error
    double y_mean = 0.0;    // quenched mean of Y_T/T
    double y_se = 0.0;
};

struct QuenchedReport {
    ModelParams params;
    LatticeSpec lattice;
    double T = 0.0;
    std::uint64_t master_seed = 0;
    std::size_t environments = 0;
    std::size_t walks_per_env = 0;
    std::size_t winding_count = 0;
    TheoreticalTargets targets;
    std::vector<EnvironmentSummary> per_env;
    double occ_dispersion = 0.0;      // sd across environments of the quenched occ means
    double mean_within_se = 0.0;      // average within-environment SE of occ/T
    double pooled_occ_mean = 0.0;
    double pooled_occ_se = 0.0;
    std::vector<RunRecord> runs;      // env-major order
};

// E environments, each replayed by W walks with independent walk streams.
inline QuenchedReport run_quenched(const ExperimentPlan& plan) {
    validate(plan);
    if (plan.mode != ExperimentMode::quenched) throw InvalidPlan("InvalidPlan: run_quenched needs quenched mode");
    const std::size_t E = plan.environments;
    const std::size_t W = plan.walks_per_env;
    QuenchedReport report;
    report.params = plan.params;
    report.lattice = plan.lattice;
    report.T = plan.T;
    report.master_seed = plan.master_seed;
    report.environments = E;
    report.walks_per_env = W;
    report.targets = theoretical_targets(plan.params);
    report.runs.resize(E * W);

    for (std::size_t e = 0; e < E; ++e) {
        RandomStream env(environment_seed(plan.master_seed, e));
        const auto initial = init_stationary(plan.params.rho, plan.lattice, env);
        const auto log = generate_log(initial, plan.params.rho, plan.T, env);
        const EnvironmentIndex index(log);
        detail::parallel_for(W, plan.threads, [&](std::size_t w) {
            const std::uint64_t id = e * W + w;
            RandomStream walk(walk_seed(plan.master_seed, id));
            const auto [real, acc] = simulate_walk(index, plan.params, walk);
            report.runs[id] = make_record(id, e, real, acc);
        });
    }

    std::vector<double> env_means;
    std::vector<double> within;
    std::vector<double> pooled;
    for (std::size_t e = 0; e < E; ++e) {
        std::vector<double> occ;
        std::vector<double> y;
        for (std::size_t w = 0; w < W; ++w) {
            const auto& r = report.runs[e * W + w];
            if (r.winding) {
                ++report.winding_count;
                continue;
            }
            occ.push_back(r.occ_integral / plan.T);
            y.push_back(r.y_integral / plan.T);
        }
        if (occ.size() < 2) throw TooFewSamples(occ.size(), 2);
        const auto occ_ci = stats::mean_ci(occ);
        const auto y_ci = stats::mean_ci(y);
        report.per_env.push_back({e, occ.size(), occ_ci.mean, occ_ci.se, y_ci.mean, y_ci.se});
        env_means.push_back(occ_ci.mean);
        within.push_back(occ_ci.se);
        pooled.insert(pooled.end(), occ.begin(), occ.end());
    }
    report.occ_dispersion = std::sqrt(stats::summarize(env_means).variance);
    report.mean_within_se = stats::summarize(within).mean;
    // Walks on one environment are correlated, so the pooled SE comes from the
    // spread of the environment means.
    report.pooled_occ_mean = stats::summarize(pooled).mean;
    report.pooled_occ_se = report.occ_dispersion / std::sqrt(static_cast<double>(E));
    return report;
}

// ---------------------------------------------------------------------------
// Probes

struct RateProbeRow {
    double t = 0.0;
    std::size_t replicas = 0;   // usable runs
    std::size_t exceedances = 0;
    double probability = 0.0;
    stats::Interval wilson95;
};

struct RateProbeTable {
    double epsilon = 0.0;
    std::vector<RateProbeRow> rows;
    bool non_increasing = true;  // no significant increase between consecutive grid points
};

// Empirical P(|Y_t| / t >= eps) on an increasing grid of horizons, R runs
// per point, each with its own streams and the default lattice for t.
inline RateProbeTable rate_probe(const ExperimentPlan& plan, double epsilon) {
    validate(plan.params);
    if (plan.t_grid.size() < 3) throw InvalidPlan("InvalidPlan: rate probe needs at least 3 grid points");
    if (!std::is_sorted(plan.t_grid.begin(), plan.t_grid.end()) ||
        std::adjacent_find(plan.t_grid.begin(), plan.t_grid.end()) != plan.t_grid.end() || plan.t_grid.front() <= 0.0)
        throw InvalidPlan("InvalidPlan: t-grid must be positive and strictly increasing");
    if (plan.replicas < 2) throw InvalidPlan("InvalidPlan: at least 2 replicas are needed");
    if (!(epsilon > 0.0)) throw InvalidPlan("InvalidPlan: epsilon must be positive");

    RateProbeTable table;
    table.epsilon = epsilon;
    for (std::size_t g = 0; g < plan.t_grid.size(); ++g) {
        const double t = plan.t_grid[g];
        const auto runs = detail::run_annealed_records(plan.params, default_lattice(t), t, plan.replicas,
                                                       plan.master_seed, g * plan.replicas, plan.threads);
        RateProbeRow row;
        row.t = t;
        for (const auto& r : runs) {
            if (r.winding) continue;
            ++row.replicas;
            if (std::abs(r.y_integral) / t >= epsilon) ++row.exceedances;
        }
        if (row.replicas == 0) throw TooFewSamples(0, 1);
        row.probability = static_cast<double>(row.exceedances) / static_cast<double>(row.replicas);
        row.wilson95 = stats::wilson_interval(row.exceedances, row.replicas, 0.95);
        table.rows.push_back(row);
    }
    for (std::size_t g = 1; g < table.rows.size(); ++g)
        if (table.rows[g].wilson95.lo > table.rows[g - 1].wilson95.hi) table.non_increasing = false;
    return table;
}

struct MomentProbeRow {
    double t = 0.0;
    std::size_t replicas = 0;
    double ratio = 0.0;        // mean(X_t^6) / t^3
    double ratio_se = 0.0;
    double bound_ratio = 0.0;  // mean(J + 15 J^2 + 90 J^3) / t^3, J = jump count
    double bound_se = 0.0;
};

struct MomentProbeTable {
    std::vector<MomentProbeRow> rows;
    bool bounded = true;    // no increase between grid points beyond the 99% joint interval
    bool dominated = true;  // ratio <= bound_ratio at every grid point
    // Doob's L^6 constant (6/5)^6: P(sup |X_s| >= g) <= kDoobL6 E[X_t^6] / g^6.
    static constexpr double kDoobL6 = 2.985984;
};

inline MomentProbeTable sixth_moment_probe(const ModelParams& params, const std::vector<double>& t_grid,
                                           std::size_t replicas, std::uint64_t master_seed, unsigned threads = 1) {
    validate(params);
    if (t_grid.size() < 3) throw InvalidPlan("InvalidPlan: moment probe needs at least 3 grid points");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() <= 0.0)
        throw InvalidPlan("InvalidPlan: t-grid must be positive and increasing");
    if (replicas < 2) throw InvalidPlan("InvalidPlan: at least 2 replicas are needed");

    MomentProbeTable table;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        const double t = t_grid[g];
        const auto runs = detail::run_annealed_records(params, default_lattice(t), t, replicas, master_seed,
                                                       g * replicas, threads);
        const auto ok = detail::usable(runs);
        if (ok.size() < 2) throw TooFewSamples(ok.size(), 2);
        const double t3 = t * t * t;
        const auto x6 = detail::column(ok, [&](const RunRecord& r) { return std::pow(static_cast<double>(r.x_final), 6) / t3; });
        const auto jb = detail::column(ok, [&](const RunRecord& r) {
            const double j = static_cast<double>(r.jump_count);
            return (j + 15.0 * j * j + 90.0 * j * j * j) / t3;
        });
        const auto x6_ci = stats::mean_ci(x6);
        const auto jb_ci = stats::mean_ci(jb);
        table.rows.push_back({t, ok.size(), x6_ci.mean, x6_ci.se, jb_ci.mean, jb_ci.se});
    }
    for (std::size_t g = 0; g < table.rows.size(); ++g) {
        const auto& row = table.rows[g];
        if (row.ratio > row.bound_ratio) table.dominated = false;
        if (g > 0) {
            const auto& prev = table.rows[g - 1];
            const double joint = std::hypot(row.ratio_se, prev.ratio_se);
            if (row.ratio - prev.ratio > stats::kZ99 * joint) table.bounded = false;
        }
    }
    return table;
}

// Maps a time-averaged box density to [0, 1].
using BoxFunctional = std::function<double(double density)>;

// Indicator that the box density exceeds rho.
inline BoxFunctional threshold_functional(double rho) {
    return [rho](double density) { return density > rho ? 1.0 : 0.0; };
}

struct DecouplingRow {
    std::int64_t separation = 0;
    double cov = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;  // 99%
    double ci_hi = 0.0;
    double mean_f1 = 0.0;
    double mean_f2 = 0.0;
    bool in_decoupling_range = false;  // separation >= H^0.6
};

struct DecouplingProbe {
    double rho = 0.0;
    std::int64_t H = 0;
    std::size_t replicas = 0;
    std::vector<DecouplingRow> rows;
};

// Covariance of f1(box [-H, 0] x [0, H]) and f2(box [y, y + H] x [0, H]) for
// each separation y, where each f is a functional of the box's space-time
// averaged density. All separations share the replicas' environments.
inline DecouplingProbe decoupling_probe(double rho, std::int64_t H, const std::vector<std::int64_t>& separations,
                                        std::size_t replicas, std::uint64_t master_seed,
                                        std::optional<LatticeSpec> lattice = std::nullopt,
                                        BoxFunctional f1 = {}, BoxFunctional f2 = {}, unsigned threads = 1) {
    validate(ModelParams{rho, 0.0});
    if (H < 1) throw InvalidPlan("InvalidPlan: H must be >= 1");
    if (separations.empty()) throw InvalidPlan("InvalidPlan: no separations");
    if (replicas < 2) throw InvalidPlan("InvalidPlan: at least 2 replicas are needed");
    const LatticeSpec lat = lattice.value_or(default_lattice(static_cast<double>(H)));
    validate(lat);
    const std::int64_t span_needed = H + 1 + *std::max_element(separations.begin(), separations.end()) + H + 1;
    if (span_needed > lat.L) throw InvalidPlan("InvalidPlan: boxes do not fit on the lattice");
    if (!f1) f1 = threshold_functional(rho);
    if (!f2) f2 = threshold_functional(rho);

    // Box 0 is [-H, 0]; box i >= 1 is [y_i, y_i + H].
    const std::size_t boxes = separations.size() + 1;
    std::vector<std::vector<std::uint8_t>> member(boxes, std::vector<std::uint8_t>(static_cast<std::size_t>(lat.L), 0));
    for (std::int64_t x = -H; x <= 0; ++x) member[0][static_cast<std::size_t>(lat.wrap(x))] = 1;
    for (std::size_t i = 1; i < boxes; ++i)
        for (std::int64_t x = separations[i - 1]; x <= separations[i - 1] + H; ++x)
            member[i][static_cast<std::size_t>(lat.wrap(x))] = 1;

    const double Hd = static_cast<double>(H);
    const double box_sites = static_cast<double>(H + 1);
    std::vector<std::vector<double>> values(boxes, std::vector<double>(replicas));
    detail::parallel_for(replicas, threads, [&](std::size_t r) {
        RandomStream env(environment_seed(master_seed, r));
        const auto initial = init_stationary(rho, lat, env);
        const auto log = generate_log(initial, rho, Hd, env);
        std::vector<double> count(boxes, 0.0);
        std::vector<double> integral(boxes, 0.0);
        for (std::size_t i = 0; i < boxes; ++i)
            for (std::int64_t x = 0; x < lat.L; ++x)
                if (member[i][static_cast<std::size_t>(x)]) count[i] += initial[x];
        LatticeConfiguration state = initial;
        std::vector<double> last(boxes, 0.0);
        for (const auto& ev : log.events) {
            const auto b = static_cast<std::size_t>(ev.bond);
            const auto c = static_cast<std::size_t>(lat.right(ev.bond));
            // The particle leaves the occupied end of the bond.
            const int sign = state[ev.bond] ? 1 : -1;
            for (std::size_t i = 0; i < boxes; ++i) {
                const int delta = member[i][c] - member[i][b];
                if (delta == 0) continue;
                integral[i] += count[i] * (ev.time - last[i]);
                last[i] = ev.time;
                count[i] += sign * delta;
            }
            state.swap_bond(ev.bond);
        }
        for (std::size_t i = 0; i < boxes; ++i) {
            integral[i] += count[i] * (Hd - last[i]);
            const double density = integral[i] / (Hd * box_sites);
            values[i][r] = i == 0 ? f1(density) : f2(density);
        }
    });

    DecouplingProbe probe;
    probe.rho = rho;
    probe.H = H;
    probe.replicas = replicas;
    const double threshold = std::pow(Hd, 0.6);
    for (std::size_t i = 1; i < boxes; ++i) {
        const auto c = stats::covariance(values[0], values[i]);
        DecouplingRow row;
        row.separation = separations[i - 1];
        row.cov = c.cov;
        row.se = c.se;
        row.ci_lo = c.cov - stats::kZ99 * c.se;
        row.ci_hi = c.cov + stats::kZ99 * c.se;
        row.mean_f1 = stats::summarize(values[0]).mean;
        row.mean_f2 = stats::summarize(values[i]).mean;
        row.in_decoupling_range = static_cast<double>(row.separation) >= threshold;
        probe.rows.push_back(row);
    }
    return probe;
}

// Smallest integer separation >= H^0.6.
inline std::int64_t decoupling_separation(std::int64_t H) {
    return static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(H), 0.6)));
}

}  // namespace ssepwalk

// ssepwalk command-line driver.
//
// Exit codes: 0 ok, 1 internal error / failed check (verify, --strict),
// 2 usage, 3 I/O, 4 malformed event log.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssepwalk.hpp"
#include "ssepwalk/config.hpp"
#include "ssepwalk/report_io.hpp"

namespace {

using namespace ssepwalk;

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kIo = 3, kBadLog = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options are parsed into holders and copied over the config-file values only
// when given on the command line.
class Binder {
public:
    explicit Binder(CLI::App* app) : app_(app) {}

    template <typename T, typename Field>
    CLI::Option* option(const std::string& name, Field RunConfig::*field, const std::string& desc) {
        auto holder = std::make_shared<T>();
        CLI::Option* opt = app_->add_option(name, *holder, desc);
        apply_.push_back([opt, holder, field](RunConfig& c) {
            if (opt->count() > 0) c.*field = *holder;
        });
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool RunConfig::*field, const std::string& desc) {
        auto holder = std::make_shared<bool>(false);
        CLI::Option* opt = app_->add_flag(name, *holder, desc);
        apply_.push_back([opt, holder, field](RunConfig& c) {
            if (opt->count() > 0) c.*field = *holder;
        });
        return opt;
    }

    // Lists and hex seeds arrive as text.
    CLI::Option* text(const std::string& name, std::function<void(RunConfig&, const std::string&)> set,
                      const std::string& desc) {
        auto holder = std::make_shared<std::string>();
        CLI::Option* opt = app_->add_option(name, *holder, desc);
        apply_.push_back([opt, holder, set](RunConfig& c) {
            if (opt->count() > 0) set(c, *holder);
        });
        return opt;
    }

    RunConfig resolve(const std::string& command) const {
        RunConfig c;
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw IoError("cannot read config file " + config_path_);
            try {
                c = parse_config(in);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        c.command = command;
        for (const auto& f : apply_) f(c);
        return c;
    }

    void add_config_options() {
        app_->add_option("--config", config_path_, "read key = value settings (flags override)");
        app_->add_option("--save-config", save_path_, "write the effective settings and continue");
    }
    const std::string& save_path() const { return save_path_; }
    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::vector<std::function<void(RunConfig&)>> apply_;
    std::string config_path_;
    std::string save_path_;
};

std::uint64_t parse_seed(const std::string& s) {
    std::uint64_t v = 0;
    if (detail::parse_hex(s, v) || detail::parse_number(s, v)) return v;
    throw UsageError("bad seed '" + s + "' (decimal or 0x-hex)");
}

void add_seed(Binder& b) {
    b.text("--seed", [](RunConfig& c, const std::string& s) { c.seed = parse_seed(s); }, "master seed");
}

void add_model(Binder& b) {
    b.option<double>("--rho", &RunConfig::rho, "particle density in [0,1]");
    b.option<double>("--lambda", &RunConfig::lambda, "slowdown on particles in [0,1]");
}

void add_threads(Binder& b) { b.option<unsigned>("--threads", &RunConfig::threads, "worker threads (0 = all cores)"); }

void add_grid(Binder& b) {
    b.text("--t-grid", [](RunConfig& c, const std::string& s) {
        try {
            c.t_grid = parse_list<double>(s);
        } catch (const Error&) {
            throw UsageError("bad --t-grid '" + s + "'");
        }
    }, "comma-separated horizons");
}

template <typename T>
T need(const std::optional<T>& v, const char* flag) {
    if (!v) throw UsageError(std::string("missing required option ") + flag);
    return *v;
}

std::string json_path(const std::string& out) {
    return std::filesystem::path(out).replace_extension(".json").string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    return os;
}

void close_out(std::ofstream& os, const std::string& path) {
    os.flush();
    if (!os) throw IoError("write failed for " + path);
}

void maybe_save(const Binder& b, const RunConfig& c) {
    if (b.save_path().empty()) return;
    auto os = open_out(b.save_path());
    os << render_config(c);
    close_out(os, b.save_path());
}

ModelParams model(const RunConfig& c) {
    ModelParams p{need(c.rho, "--rho"), need(c.lambda, "--lambda")};
    validate(p);
    return p;
}

LatticeSpec lattice_for(const RunConfig& c, double T) {
    LatticeSpec lat = c.L > 0 ? LatticeSpec{c.L} : default_lattice(T);
    validate(lat);
    return lat;
}

void print_estimates(const std::vector<QuantityEstimate>& entries) {
    std::printf("%-22s %14s %12s %27s %10s %s\n", "quantity", "estimate", "se", "ci99", "target", "verdict");
    for (const auto& e : entries) {
        char ci[64];
        std::snprintf(ci, sizeof ci, "[%.6g, %.6g]", e.ci_lo, e.ci_hi);
        char target[32] = "-";
        if (e.target) std::snprintf(target, sizeof target, "%.6g", *e.target);
        std::printf("%-22s %14.8g %12.4g %27s %10s %s\n", e.quantity.c_str(), e.estimate, e.se, ci, target,
                    to_string(e.verdict));
    }
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Binder& b) {
    const RunConfig c = b.resolve("simulate");
    const ModelParams params = model(c);
    ExperimentPlan plan;
    plan.params = params;
    plan.T = need(c.T, "--T");
    plan.lattice = lattice_for(c, plan.T);
    plan.replicas = c.replicas;
    plan.master_seed = c.seed;
    plan.threads = c.threads;
    if (c.out.empty()) throw UsageError("missing required option --out");
    validate(plan);
    maybe_save(b, c);

    auto csv = open_out(c.out);
    const auto jpath = json_path(c.out);
    auto js = open_out(jpath);

    const auto report = run_annealed(plan);
    auto echo = param_echo(params, plan.lattice, plan.T, plan.master_seed);
    echo.emplace_back("mode", "annealed");
    echo.emplace_back("replicas", std::to_string(plan.replicas));
    write_run_csv(csv, echo, report.runs);
    close_out(csv, c.out);
    js << to_json(report).dump(2) << '\n';
    close_out(js, jpath);

    std::printf("annealed: rho=%g lambda=%g T=%g L=%lld R=%zu winding=%zu\n", params.rho, params.lambda, plan.T,
                static_cast<long long>(plan.lattice.L), plan.replicas, report.winding_count);
    print_estimates(report.entries);
    if (report.ks.n > 0) std::printf("KS vs N(0,1): D=%.6g p=%.6g (n=%zu)\n", report.ks.statistic, report.ks.p_value, report.ks.n);
    if (c.strict)
        for (const auto& e : report.entries)
            if (e.verdict == Verdict::fail) return kFailed;
    return kOk;
}

int cmd_quenched(const Binder& b) {
    const RunConfig c = b.resolve("quenched");
    const ModelParams params = model(c);
    ExperimentPlan plan;
    plan.params = params;
    plan.T = need(c.T, "--T");
    plan.lattice = lattice_for(c, plan.T);
    plan.mode = ExperimentMode::quenched;
    plan.environments = c.environments;
    plan.walks_per_env = c.walks_per_env;
    plan.master_seed = c.seed;
    plan.threads = c.threads;
    if (c.out.empty()) throw UsageError("missing required option --out");
    validate(plan);
    maybe_save(b, c);

    auto csv = open_out(c.out);
    const auto jpath = json_path(c.out);
    auto js = open_out(jpath);

    const auto report = run_quenched(plan);
    auto echo = param_echo(params, plan.lattice, plan.T, plan.master_seed);
    echo.emplace_back("mode", "quenched");
    echo.emplace_back("environments", std::to_string(plan.environments));
    echo.emplace_back("walks_per_env", std::to_string(plan.walks_per_env));
    write_run_csv(csv, echo, report.runs);
    close_out(csv, c.out);
    js << to_json(report).dump(2) << '\n';
    close_out(js, jpath);

    std::printf("quenched: rho=%g lambda=%g T=%g L=%lld E=%zu W=%zu winding=%zu target occ=%.6g\n", params.rho,
                params.lambda, plan.T, static_cast<long long>(plan.lattice.L), plan.environments, plan.walks_per_env,
                report.winding_count, report.targets.occ_limit);
    std::printf("%6s %12s %10s %12s %10s\n", "env", "occ/T", "se", "Y/T", "se");
    for (const auto& e : report.per_env)
        std::printf("%6llu %12.6f %10.3g %12.6f %10.3g\n", static_cast<unsigned long long>(e.env_id), e.occ_mean,
                    e.occ_se, e.y_mean, e.y_se);
    std::printf("across-env dispersion %.6g, mean within-env se %.6g, pooled occ/T %.6g +- %.3g\n",
                report.occ_dispersion, report.mean_within_se, report.pooled_occ_mean, report.pooled_occ_se);
    if (c.strict && std::abs(report.pooled_occ_mean - report.targets.occ_limit) > stats::kZ99 * report.pooled_occ_se)
        return kFailed;
    return kOk;
}

int cmd_verify(const Binder& b) {
    const RunConfig c = b.resolve("verify");
    if (c.n_max < 1) throw UsageError("--n-max must be >= 1");
    if (c.ell_max < 1) throw UsageError("--ell-max must be >= 1");
    if (c.window < 1) throw UsageError("--window must be >= 1");
    if (c.window > oracle::kMaxEnumerationRadius)
        throw UsageError("--window " + std::to_string(c.window) + " exceeds the enumeration budget (max " +
                         std::to_string(oracle::kMaxEnumerationRadius) + ")");
    std::ofstream js;
    const std::string jpath = c.out.empty() ? std::string() : json_path(c.out);
    if (!jpath.empty()) js = open_out(jpath);
    maybe_save(b, c);

    using Q = oracle::Rational;
    const std::vector<Q> lambdas = {Q(0), Q(1, 4), Q(1, 2), Q(1)};
    const std::vector<Q> rhos = {Q(0), Q(1, 4), Q(1, 2), Q(3, 4), Q(1)};
    constexpr double kTolerance = 1e-12;
    const int W = c.window;

    nlohmann::json cases = nlohmann::json::array();
    bool all_ok = true;
    auto emit = [&](const std::string& identity, int n, int ell, const Q& lambda, const std::optional<Q>& rho,
                    const std::string& residual, bool ok, const std::string& note) {
        all_ok = all_ok && ok;
        const std::string ell_s = ell > 0 ? std::to_string(ell) : "-";
        const std::string rho_s = rho ? oracle::to_string(*rho) : "-";
        std::printf("%-4s n=%d ell=%s lambda=%s rho=%s residual=%s %s%s\n", identity.c_str(), n, ell_s.c_str(),
                    oracle::to_string(lambda).c_str(), rho_s.c_str(), residual.c_str(), ok ? "PASS" : "FAIL",
                    note.empty() ? "" : (" " + note).c_str());
        nlohmann::json j = {{"identity", identity}, {"n", n},          {"lambda", oracle::to_string(lambda)},
                            {"residual", residual}, {"verdict", ok ? "PASS" : "FAIL"}};
        j["ell"] = ell > 0 ? nlohmann::json(ell) : nlohmann::json(nullptr);
        j["rho"] = rho ? nlohmann::json(oracle::to_string(*rho)) : nlohmann::json(nullptr);
        if (!note.empty()) j["error"] = note;
        cases.push_back(j);
    };
    auto fmt_double = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };
    std::vector<double> lambdas_d;
    for (const auto& l : lambdas) lambdas_d.push_back(boost::rational_cast<double>(l));

    for (int n = 1; n <= c.n_max; ++n) {
        for (const auto& rho : rhos) {
            try {
                if (c.exact) {
                    const auto res = oracle::check_psi_identity<Q>(n, lambdas, rho, W);
                    for (std::size_t i = 0; i < lambdas.size(); ++i)
                        emit("psi", n, 0, lambdas[i], rho, oracle::to_string(res[i]), res[i] == Q(0), "");
                } else {
                    const auto res = oracle::check_psi_identity<double>(n, lambdas_d, boost::rational_cast<double>(rho), W);
                    for (std::size_t i = 0; i < lambdas.size(); ++i)
                        emit("psi", n, 0, lambdas[i], rho, fmt_double(res[i]), res[i] <= kTolerance, "");
                }
            } catch (const InsufficientWindow& e) {
                for (const auto& l : lambdas) emit("psi", n, 0, l, rho, "-", false, e.what());
            }
        }
        for (int ell = 1; ell <= c.ell_max; ++ell) {
            try {
                if (c.exact) {
                    const auto res = oracle::check_phi_identity<Q>(n, ell, lambdas, W);
                    for (std::size_t i = 0; i < lambdas.size(); ++i) {
                        const bool ok = res[i].residual == Q(0) && res[i].gradient_residual == Q(0) &&
                                        res[i].ak_residual == Q(0);
                        emit("phi", n, ell, lambdas[i], std::nullopt, oracle::to_string(res[i].residual), ok, "");
                    }
                } else {
                    const auto res = oracle::check_phi_identity<double>(n, ell, lambdas_d, W);
                    for (std::size_t i = 0; i < lambdas.size(); ++i) {
                        const bool ok = res[i].residual <= kTolerance && res[i].gradient_residual <= kTolerance &&
                                        res[i].ak_residual <= kTolerance;
                        emit("phi", n, ell, lambdas[i], std::nullopt, fmt_double(res[i].residual), ok, "");
                    }
                }
            } catch (const InsufficientWindow& e) {
                for (const auto& l : lambdas) emit("phi", n, ell, l, std::nullopt, "-", false, e.what());
            }
        }
    }
    std::printf("%s: %zu cases, window radius %d (%d sites), %s arithmetic\n", all_ok ? "ALL PASS" : "FAILURES",
                cases.size(), W, 2 * W + 1, c.exact ? "exact rational" : "double");
    if (js.is_open()) {
        nlohmann::json doc = {{"schema", "ssepwalk-verify v1"},
                              {"window", W},
                              {"exact", c.exact},
                              {"all_pass", all_ok},
                              {"cases", cases}};
        js << doc.dump(2) << '\n';
        close_out(js, jpath);
    }
    return all_ok ? kOk : kFailed;
}

ParamEcho record_echo(const ModelParams& params, const LatticeSpec& lat, double T, std::uint64_t seed,
                      std::uint64_t replica) {
    auto echo = param_echo(params, lat, T, seed);
    echo.emplace_back("mode", "record");
    echo.emplace_back("replica", std::to_string(replica));
    return echo;
}

int cmd_record(const Binder& b) {
    const RunConfig c = b.resolve("record");
    const ModelParams params = model(c);
    const double T = need(c.T, "--T");
    const LatticeSpec lat = lattice_for(c, T);
    if (!(T > 0.0) || !std::isfinite(T)) throw UsageError("--T must be positive");
    if (c.log_out.empty()) throw UsageError("missing required option --log-out");
    maybe_save(b, c);

    auto log_os = open_out(c.log_out);
    std::optional<std::ofstream> csv;
    if (!c.out.empty()) csv = open_out(c.out);

    RandomStream env(environment_seed(c.seed, c.replica));
    RandomStream walk(walk_seed(c.seed, c.replica));
    const auto res = simulate_joint(params, lat, T, env, walk, JointOptions{true, false});
    write_event_log(log_os, *res.log);
    close_out(log_os, c.log_out);
    const auto row = make_record(c.replica, c.replica, res.walk, res.acc);
    if (csv) {
        write_run_csv(*csv, record_echo(params, lat, T, c.seed, c.replica), {row});
        close_out(*csv, c.out);
    }
    std::printf("recorded %zu swaps on L=%lld up to T=%g\n%s\n%s\n", res.log->events.size(),
                static_cast<long long>(lat.L), T, std::string(kRunColumns).c_str(), format_run_row(row).c_str());
    return kOk;
}

int cmd_replay(const Binder& b) {
    RunConfig c = b.resolve("replay");
    if (c.log_in.empty()) throw UsageError("missing required option --log-in");
    const double lambda = need(c.lambda, "--lambda");
    std::ifstream in(c.log_in, std::ios::binary);
    if (!in) throw IoError("cannot read " + c.log_in);
    const auto log = read_event_log(in);
    // The walk stream defaults to the one paired with the log's environment stream.
    const bool seed_given = b.app()->get_option("--seed")->count() > 0 || c.seed != 0;
    const bool replica_given = b.app()->get_option("--replica")->count() > 0 || c.replica != 0;
    if (!seed_given) c.seed = log.seed.master_seed;
    if (!replica_given) c.replica = log.seed.stream_id;
    if (c.rho && *c.rho != log.rho) throw UsageError("--rho differs from the log's density");
    c.rho = log.rho;
    c.T = log.horizon;
    const ModelParams params{log.rho, lambda};
    validate(params);
    maybe_save(b, c);
    std::optional<std::ofstream> csv;
    if (!c.out.empty()) csv = open_out(c.out);

    RandomStream walk(walk_seed(c.seed, c.replica));
    const auto [real, acc] = simulate_walk(log, params, walk);
    const auto row = make_record(c.replica, log.seed.stream_id, real, acc);
    if (csv) {
        write_run_csv(*csv, record_echo(params, log.lattice, log.horizon, c.seed, c.replica), {row});
        close_out(*csv, c.out);
    }
    std::printf("replayed %zu swaps\n%s\n%s\n", log.events.size(), std::string(kRunColumns).c_str(),
                format_run_row(row).c_str());
    return kOk;
}

int cmd_rate_probe(const Binder& b) {
    const RunConfig c = b.resolve("rate-probe");
    ExperimentPlan plan;
    plan.params = model(c);
    plan.replicas = c.replicas;
    plan.t_grid = c.t_grid;
    plan.master_seed = c.seed;
    plan.threads = c.threads;
    maybe_save(b, c);
    std::optional<std::ofstream> csv;
    std::optional<std::ofstream> js;
    if (!c.out.empty()) {
        csv = open_out(c.out);
        js = open_out(json_path(c.out));
    }
    const auto table = rate_probe(plan, c.epsilon);
    std::ostringstream os;
    os << "# " << kCsvSchema << " rho=" << detail::format_real(plan.params.rho)
       << " lambda=" << detail::format_real(plan.params.lambda) << " epsilon=" << detail::format_real(c.epsilon)
       << " replicas=" << plan.replicas << " seed=" << detail::format_hex(plan.master_seed) << '\n'
       << "t,replicas,exceedances,probability,wilson95_lo,wilson95_hi\n";
    for (const auto& r : table.rows)
        os << detail::format_real(r.t) << ',' << r.replicas << ',' << r.exceedances << ','
           << detail::format_real(r.probability) << ',' << detail::format_real(r.wilson95.lo) << ','
           << detail::format_real(r.wilson95.hi) << '\n';
    std::cout << os.str();
    std::printf("non-increasing within Wilson 95%% intervals: %s\n", table.non_increasing ? "yes" : "no");
    if (csv) {
        *csv << os.str();
        close_out(*csv, c.out);
        *js << to_json(table).dump(2) << '\n';
        close_out(*js, json_path(c.out));
    }
    return c.strict && !table.non_increasing ? kFailed : kOk;
}

int cmd_moments(const Binder& b) {
    const RunConfig c = b.resolve("moments");
    const ModelParams params = model(c);
    maybe_save(b, c);
    std::optional<std::ofstream> csv;
    std::optional<std::ofstream> js;
    if (!c.out.empty()) {
        csv = open_out(c.out);
        js = open_out(json_path(c.out));
    }
    const auto table = sixth_moment_probe(params, c.t_grid, c.replicas, c.seed, c.threads);
    std::ostringstream os;
    os << "# " << kCsvSchema << " rho=" << detail::format_real(params.rho)
       << " lambda=" << detail::format_real(params.lambda) << " replicas=" << c.replicas
       << " seed=" << detail::format_hex(c.seed) << '\n'
       << "t,replicas,ratio,ratio_se,bound_ratio,bound_se\n";
    for (const auto& r : table.rows)
        os << detail::format_real(r.t) << ',' << r.replicas << ',' << detail::format_real(r.ratio) << ','
           << detail::format_real(r.ratio_se) << ',' << detail::format_real(r.bound_ratio) << ','
           << detail::format_real(r.bound_se) << '\n';
    std::cout << os.str();
    std::printf("bounded: %s, dominated by E[J + 15J^2 + 90J^3]: %s\n", table.bounded ? "yes" : "no",
                table.dominated ? "yes" : "no");
    if (csv) {
        *csv << os.str();
        close_out(*csv, c.out);
        *js << to_json(table).dump(2) << '\n';
        close_out(*js, json_path(c.out));
    }
    return c.strict && !(table.bounded && table.dominated) ? kFailed : kOk;
}

int cmd_decouple(const Binder& b) {
    const RunConfig c = b.resolve("decouple");
    const double rho = need(c.rho, "--rho");
    std::vector<std::int64_t> seps = c.separations;
    if (seps.empty()) seps = {0, decoupling_separation(c.H)};
    std::optional<LatticeSpec> lat;
    if (c.L > 0) lat = LatticeSpec{c.L};
    maybe_save(b, c);
    std::optional<std::ofstream> csv;
    std::optional<std::ofstream> js;
    if (!c.out.empty()) {
        csv = open_out(c.out);
        js = open_out(json_path(c.out));
    }
    const auto probe = decoupling_probe(rho, c.H, seps, c.replicas, c.seed, lat, {}, {}, c.threads);
    std::ostringstream os;
    os << "# " << kCsvSchema << " rho=" << detail::format_real(rho) << " H=" << c.H << " replicas=" << c.replicas
       << " seed=" << detail::format_hex(c.seed) << '\n'
       << "separation,cov,se,ci99_lo,ci99_hi,mean_f1,mean_f2,in_decoupling_range\n";
    bool ok = true;
    for (const auto& r : probe.rows) {
        os << r.separation << ',' << detail::format_real(r.cov) << ',' << detail::format_real(r.se) << ','
           << detail::format_real(r.ci_lo) << ',' << detail::format_real(r.ci_hi) << ','
           << detail::format_real(r.mean_f1) << ',' << detail::format_real(r.mean_f2) << ','
           << (r.in_decoupling_range ? 1 : 0) << '\n';
        if (r.in_decoupling_range && std::abs(r.cov) > 0.05) ok = false;
    }
    std::cout << os.str();
    std::printf("|cov| <= 0.05 at every separation >= H^0.6: %s\n", ok ? "yes" : "no");
    if (csv) {
        *csv << os.str();
        close_out(*csv, c.out);
        *js << to_json(probe).dump(2) << '\n';
        close_out(*js, json_path(c.out));
    }
    return c.strict && !ok ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walk on the simple symmetric exclusion process: simulation and checks"};
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
    std::vector<std::unique_ptr<Binder>> binders;
    auto sub = [&](const char* name, const char* desc) {
        binders.push_back(std::make_unique<Binder>(app.add_subcommand(name, desc)));
        binders.back()->add_config_options();
        return binders.back().get();
    };

    {
        Binder* b = sub("simulate", "annealed replicas: per-run CSV plus JSON summary");
        add_model(*b);
        b->option<double>("--T", &RunConfig::T, "time horizon");
        b->option<std::int64_t>("--L", &RunConfig::L, "lattice size (default max(4096, 16 sqrt T))");
        b->option<std::uint64_t>("--replicas", &RunConfig::replicas, "number of replicas");
        add_seed(*b);
        b->option<std::string>("--out", &RunConfig::out, "CSV path; the JSON goes next to it");
        b->flag("--no-log", &RunConfig::no_log, "stream the environment without storing logs (always the case here)");
        b->flag("--strict", &RunConfig::strict, "exit 1 when a verdict fails");
        add_threads(*b);
        commands.emplace_back(b->app(), [b] { return cmd_simulate(*b); });
    }
    {
        Binder* b = sub("quenched", "environments replayed by many walks");
        add_model(*b);
        b->option<double>("--T", &RunConfig::T, "time horizon");
        b->option<std::int64_t>("--L", &RunConfig::L, "lattice size");
        b->option<std::uint64_t>("--environments", &RunConfig::environments, "number of environments E");
        b->option<std::uint64_t>("--walks-per-env", &RunConfig::walks_per_env, "walks per environment W");
        add_seed(*b);
        b->option<std::string>("--out", &RunConfig::out, "CSV path; the JSON goes next to it");
        b->flag("--strict", &RunConfig::strict, "exit 1 when the pooled mean misses the target");
        add_threads(*b);
        commands.emplace_back(b->app(), [b] { return cmd_quenched(*b); });
    }
    {
        Binder* b = sub("verify", "exhaustive generator identities for psi and phi");
        b->option<int>("--n-max", &RunConfig::n_max, "largest n");
        b->option<int>("--ell-max", &RunConfig::ell_max, "largest ell");
        b->option<int>("--window", &RunConfig::window, "window radius W (2W+1 sites)");
        b->flag("--exact", &RunConfig::exact, "rational arithmetic, residuals must be exactly 0");
        b->option<std::string>("--out", &RunConfig::out, "JSON path (extension replaced by .json)");
        commands.emplace_back(b->app(), [b] { return cmd_verify(*b); });
    }
    {
        Binder* b = sub("record", "one joint run; writes the environment event log");
        add_model(*b);
        b->option<double>("--T", &RunConfig::T, "time horizon");
        b->option<std::int64_t>("--L", &RunConfig::L, "lattice size");
        add_seed(*b);
        b->option<std::uint64_t>("--replica", &RunConfig::replica, "run index (environment and walk stream)");
        b->option<std::string>("--log-out", &RunConfig::log_out, "event-log path");
        b->option<std::string>("--out", &RunConfig::out, "CSV path for the run row");
        commands.emplace_back(b->app(), [b] { return cmd_record(*b); });
    }
    {
        Binder* b = sub("replay", "walk on a stored event log");
        b->option<std::string>("--log-in", &RunConfig::log_in, "event-log path");
        add_model(*b);
        add_seed(*b);
        b->option<std::uint64_t>("--replica", &RunConfig::replica, "walk index (default: the log's stream id)");
        b->option<std::string>("--out", &RunConfig::out, "CSV path for the run row");
        commands.emplace_back(b->app(), [b] { return cmd_replay(*b); });
    }
    {
        Binder* b = sub("rate-probe", "P(|Y_t|/t >= eps) over a grid of horizons");
        add_model(*b);
        add_grid(*b);
        b->option<std::uint64_t>("--replicas", &RunConfig::replicas, "replicas per grid point");
        b->option<double>("--epsilon", &RunConfig::epsilon, "threshold eps");
        add_seed(*b);
        b->option<std::string>("--out", &RunConfig::out, "CSV path");
        b->flag("--strict", &RunConfig::strict, "exit 1 unless non-increasing");
        add_threads(*b);
        commands.emplace_back(b->app(), [b] { return cmd_rate_probe(*b); });
    }
    {
        Binder* b = sub("moments", "E[X_t^6]/t^3 over a grid of horizons");
        add_model(*b);
        add_grid(*b);
        b->option<std::uint64_t>("--replicas", &RunConfig::replicas, "replicas per grid point");
        add_seed(*b);
        b->option<std::string>("--out", &RunConfig::out, "CSV path");
        b->flag("--strict", &RunConfig::strict, "exit 1 unless bounded and dominated");
        add_threads(*b);
        commands.emplace_back(b->app(), [b] { return cmd_moments(*b); });
    }
    {
        Binder* b = sub("decouple", "covariance of box-density functionals at lateral separations");
        b->option<double>("--rho", &RunConfig::rho, "particle density");
        b->option<std::int64_t>("--H", &RunConfig::H, "box size H");
        b->text("--separations", [](RunConfig& c, const std::string& s) {
            try {
                c.separations = parse_list<std::int64_t>(s);
            } catch (const Error&) {
                throw UsageError("bad --separations '" + s + "'");
            }
        }, "comma-separated separations (default 0 and ceil(H^0.6))");
        b->option<std::int64_t>("--L", &RunConfig::L, "lattice size");
        b->option<std::uint64_t>("--replicas", &RunConfig::replicas, "replicas");
        add_seed(*b);
        b->option<std::string>("--out", &RunConfig::out, "CSV path");
        b->flag("--strict", &RunConfig::strict, "exit 1 when |cov| > 0.05 in range");
        add_threads(*b);
        commands.emplace_back(b->app(), [b] { return cmd_decouple(*b); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    for (const auto& [cmd, run] : commands) {
        if (!cmd->parsed()) continue;
        try {
            return run();
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
            return kUsage;
        } catch (const IoError& e) {
            std::cerr << "I/O error: " << e.what() << '\n';
            return kIo;
        } catch (const MalformedLog& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kBadLog;
        } catch (const OutOfRange& e) {
            std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
            return kUsage;
        } catch (const InvalidPlan& e) {
            std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
            return kUsage;
        } catch (const std::exception& e) {
            std::cerr << "internal error: " << e.what() << '\n';
            return kFailed;
        }
    }
    return kUsage;
}

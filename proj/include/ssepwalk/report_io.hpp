#pragma once

// Per-run CSV rows and JSON summaries.
//
// CSV layout:
//   # ssepwalk-csv v1 key=value ...     parameter echo
//   replica_id,env_id,T,X_T,...          column header
//   one row per run, reals with 17 significant digits

#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssepwalk/estimators.hpp"
#include "ssepwalk/event_log_io.hpp"
#include "ssepwalk/walk.hpp"

namespace ssepwalk {

inline constexpr std::string_view kCsvSchema = "ssepwalk-csv v1";
inline constexpr std::string_view kRunColumns =
    "replica_id,env_id,T,X_T,jump_count,max_abs_X,occ_integral,qv_integral,y_integral,winding_flag";

// Ordered key=value pairs echoed on the first CSV line.
using ParamEcho = std::vector<std::pair<std::string, std::string>>;

inline ParamEcho param_echo(const ModelParams& params, const LatticeSpec& lattice, double T, std::uint64_t seed) {
    return {{"rho", detail::format_real(params.rho)},
            {"lambda", detail::format_real(params.lambda)},
            {"T", detail::format_real(T)},
            {"L", std::to_string(lattice.L)},
            {"seed", detail::format_hex(seed)}};
}

inline void write_csv_preamble(std::ostream& os, const ParamEcho& echo, std::string_view columns) {
    os << "# " << kCsvSchema;
    for (const auto& [k, v] : echo) os << ' ' << k << '=' << v;
    os << '\n' << columns << '\n';
}

inline std::string format_run_row(const RunRecord& r) {
    std::string row;
    row += std::to_string(r.replica_id) + ',';
    row += std::to_string(r.env_id) + ',';
    row += detail::format_real(r.T) + ',';
    row += std::to_string(r.x_final) + ',';
    row += std::to_string(r.jump_count) + ',';
    row += std::to_string(r.max_abs_x) + ',';
    row += detail::format_real(r.occ_integral) + ',';
    row += detail::format_real(r.qv_integral) + ',';
    row += detail::format_real(r.y_integral) + ',';
    row += r.winding ? '1' : '0';
    return row;
}

inline void write_run_csv(std::ostream& os, const ParamEcho& echo, const std::vector<RunRecord>& runs) {
    write_csv_preamble(os, echo, kRunColumns);
    for (const auto& r : runs) os << format_run_row(r) << '\n';
}

// Parses rows written by write_run_csv (preamble lines are skipped).
inline std::vector<RunRecord> read_run_csv(std::istream& is) {
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line == kRunColumns) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        RunRecord r;
        int winding = 0;
        const bool ok = cells.size() == 10 && detail::parse_number(cells[0], r.replica_id) &&
                        detail::parse_number(cells[1], r.env_id) && detail::parse_number(cells[2], r.T) &&
                        detail::parse_number(cells[3], r.x_final) && detail::parse_number(cells[4], r.jump_count) &&
                        detail::parse_number(cells[5], r.max_abs_x) &&
                        detail::parse_number(cells[6], r.occ_integral) &&
                        detail::parse_number(cells[7], r.qv_integral) &&
                        detail::parse_number(cells[8], r.y_integral) && detail::parse_number(cells[9], winding) &&
                        (winding == 0 || winding == 1);
        if (!ok) throw Error("bad CSV row at line " + std::to_string(line_no));
        r.winding = winding == 1;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const QuantityEstimate& q) {
    nlohmann::json j;
    j["quantity"] = q.quantity;
    j["estimate"] = q.estimate;
    j["se"] = q.se;
    j["ci99"] = {q.ci_lo, q.ci_hi};
    j["target"] = q.target ? nlohmann::json(*q.target) : nlohmann::json(nullptr);
    j["verdict"] = to_string(q.verdict);
    return j;
}

inline nlohmann::json params_json(const ModelParams& params, const LatticeSpec& lattice, double T,
                                  std::uint64_t seed) {
    return {{"rho", params.rho},
            {"lambda", params.lambda},
            {"L", lattice.L},
            {"T", T},
            {"master_seed", detail::format_hex(seed)}};
}

inline nlohmann::json to_json(const EstimateReport& r) {
    nlohmann::json j;
    j["schema"] = "ssepwalk-report v1";
    j["mode"] = "annealed";
    j["params"] = params_json(r.params, r.lattice, r.T, r.master_seed);
    j["replicas"] = r.replicas;
    j["winding_count"] = r.winding_count;
    j["targets"] = {{"sigma_sq", r.targets.sigma_sq}, {"occ_limit", r.targets.occ_limit}};
    j["entries"] = nlohmann::json::array();
    for (const auto& e : r.entries) j["entries"].push_back(to_json(e));
    if (r.ks.n > 0)
        j["ks"] = {{"n", r.ks.n}, {"statistic", r.ks.statistic}, {"p_value", r.ks.p_value}};
    else
        j["ks"] = nullptr;
    return j;
}

inline nlohmann::json to_json(const QuenchedReport& r) {
    nlohmann::json j;
    j["schema"] = "ssepwalk-report v1";
    j["mode"] = "quenched";
    j["params"] = params_json(r.params, r.lattice, r.T, r.master_seed);
    j["environments"] = r.environments;
    j["walks_per_env"] = r.walks_per_env;
    j["winding_count"] = r.winding_count;
    j["targets"] = {{"sigma_sq", r.targets.sigma_sq}, {"occ_limit", r.targets.occ_limit}};
    j["per_environment"] = nlohmann::json::array();
    for (const auto& e : r.per_env)
        j["per_environment"].push_back({{"env_id", e.env_id},
                                        {"walks", e.walks},
                                        {"occ_mean", e.occ_mean},
                                        {"occ_se", e.occ_se},
                                        {"y_mean", e.y_mean},
                                        {"y_se", e.y_se}});
    j["occ_dispersion"] = r.occ_dispersion;
    j["mean_within_se"] = r.mean_within_se;
    j["pooled_occ_mean"] = r.pooled_occ_mean;
    j["pooled_occ_se"] = r.pooled_occ_se;
    return j;
}

inline nlohmann::json to_json(const RateProbeTable& t) {
    nlohmann::json j;
    j["epsilon"] = t.epsilon;
    j["non_increasing"] = t.non_increasing;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : t.rows)
        j["rows"].push_back({{"t", r.t},
                             {"replicas", r.replicas},
                             {"exceedances", r.exceedances},
                             {"probability", r.probability},
                             {"wilson95", {r.wilson95.lo, r.wilson95.hi}}});
    return j;
}

inline nlohmann::json to_json(const MomentProbeTable& t) {
    nlohmann::json j;
    j["bounded"] = t.bounded;
    j["dominated"] = t.dominated;
    j["doob_l6_constant"] = MomentProbeTable::kDoobL6;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : t.rows)
        j["rows"].push_back({{"t", r.t},
                             {"replicas", r.replicas},
                             {"ratio", r.ratio},
                             {"ratio_se", r.ratio_se},
                             {"bound_ratio", r.bound_ratio},
                             {"bound_se", r.bound_se}});
    return j;
}

inline nlohmann::json to_json(const DecouplingProbe& p) {
    nlohmann::json j;
    j["rho"] = p.rho;
    j["H"] = p.H;
    j["replicas"] = p.replicas;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : p.rows)
        j["rows"].push_back({{"separation", r.separation},
                             {"cov", r.cov},
                             {"se", r.se},
                             {"ci99", {r.ci_lo, r.ci_hi}},
                             {"mean_f1", r.mean_f1},
                             {"mean_f2", r.mean_f2},
                             {"in_decoupling_range", r.in_decoupling_range}});
    return j;
}

}  // namespace ssepwalk

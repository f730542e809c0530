#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment, lists are comma separated. Unset optional keys are omitted when
// rendering. parse_config(render_config(c)) == c.

#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssepwalk/errors.hpp"
#include "ssepwalk/event_log_io.hpp"

namespace ssepwalk {

struct RunConfig {
    std::string command;  // subcommand name, informational
    std::optional<double> rho;
    std::optional<double> lambda;
    std::optional<double> T;
    std::int64_t L = 0;  // 0: default lattice for T
    std::uint64_t replicas = 100;
    std::uint64_t seed = 0;
    std::uint64_t environments = 0;
    std::uint64_t walks_per_env = 0;
    std::uint64_t replica = 0;  // record/replay run index
    unsigned threads = 1;
    std::vector<double> t_grid;
    double epsilon = 0.05;
    std::int64_t H = 64;
    std::vector<std::int64_t> separations;
    int n_max = 4;
    int ell_max = 3;
    int window = 9;
    bool exact = false;
    bool strict = false;
    bool no_log = false;
    std::string out;
    std::string log_out;
    std::string log_in;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += format_real(xs[i]);
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

template <typename T>
std::vector<T> split_list(std::string_view s, const std::string& key) {
    std::vector<T> out;
    if (trim(s).empty()) return out;
    for (;;) {
        const auto comma = s.find(',');
        T v{};
        if (!parse_number(trim(s.substr(0, comma)), v)) throw Error("config: bad list value for " + key);
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace detail

// Parses a comma-separated list such as "250,1000,4000".
template <typename T>
std::vector<T> parse_list(std::string_view s) {
    return detail::split_list<T>(s, "list");
}

inline std::string render_config(const RunConfig& c) {
    std::ostringstream os;
    os << "# ssepwalk run configuration\n";
    if (!c.command.empty()) os << "command = " << c.command << '\n';
    if (c.rho) os << "rho = " << detail::format_real(*c.rho) << '\n';
    if (c.lambda) os << "lambda = " << detail::format_real(*c.lambda) << '\n';
    if (c.T) os << "T = " << detail::format_real(*c.T) << '\n';
    os << "L = " << c.L << '\n';
    os << "replicas = " << c.replicas << '\n';
    os << "seed = " << detail::format_hex(c.seed) << '\n';
    os << "environments = " << c.environments << '\n';
    os << "walks-per-env = " << c.walks_per_env << '\n';
    os << "replica = " << c.replica << '\n';
    os << "threads = " << c.threads << '\n';
    os << "t-grid = " << detail::join_list(c.t_grid) << '\n';
    os << "epsilon = " << detail::format_real(c.epsilon) << '\n';
    os << "H = " << c.H << '\n';
    os << "separations = " << detail::join_list(c.separations) << '\n';
    os << "n-max = " << c.n_max << '\n';
    os << "ell-max = " << c.ell_max << '\n';
    os << "window = " << c.window << '\n';
    os << "exact = " << (c.exact ? "true" : "false") << '\n';
    os << "strict = " << (c.strict ? "true" : "false") << '\n';
    os << "no-log = " << (c.no_log ? "true" : "false") << '\n';
    os << "out = " << c.out << '\n';
    os << "log-out = " << c.log_out << '\n';
    os << "log-in = " << c.log_in << '\n';
    return os.str();
}

inline RunConfig parse_config(std::istream& is) {
    RunConfig c;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        auto fail = [&] { throw Error("config line " + std::to_string(line_no) + ": bad value for " + key); };
        auto num = [&](auto& slot) {
            if (!detail::parse_number(value, slot)) fail();
        };
        auto real = [&](std::optional<double>& slot) {
            double v = 0.0;
            if (!detail::parse_number(value, v)) fail();
            slot = v;
        };
        auto flag = [&](bool& slot) {
            if (value == "true")
                slot = true;
            else if (value == "false")
                slot = false;
            else
                fail();
        };
        if (key == "command") c.command = value;
        else if (key == "rho") real(c.rho);
        else if (key == "lambda") real(c.lambda);
        else if (key == "T") real(c.T);
        else if (key == "L") num(c.L);
        else if (key == "replicas") num(c.replicas);
        else if (key == "seed") {
            if (!detail::parse_hex(value, c.seed) && !detail::parse_number(value, c.seed)) fail();
        }
        else if (key == "environments") num(c.environments);
        else if (key == "walks-per-env") num(c.walks_per_env);
        else if (key == "replica") num(c.replica);
        else if (key == "threads") num(c.threads);
        else if (key == "t-grid") c.t_grid = detail::split_list<double>(value, key);
        else if (key == "epsilon") num(c.epsilon);
        else if (key == "H") num(c.H);
        else if (key == "separations") c.separations = detail::split_list<std::int64_t>(value, key);
        else if (key == "n-max") num(c.n_max);
        else if (key == "ell-max") num(c.ell_max);
        else if (key == "window") num(c.window);
        else if (key == "exact") flag(c.exact);
        else if (key == "strict") flag(c.strict);
        else if (key == "no-log") flag(c.no_log);
        else if (key == "out") c.out = value;
        else if (key == "log-out") c.log_out = value;
        else if (key == "log-in") c.log_in = value;
        else throw Error("config line " + std::to_string(line_no) + ": unknown key " + key);
    }
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

}  // namespace ssepwalk

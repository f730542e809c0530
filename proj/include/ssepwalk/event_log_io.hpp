#pragma once

// SSEPLOG text format, version 1:
//
//   SSEPLOG 1 <L> <rho> <T> <master_seed as 0x-prefixed lowercase hex> <stream_id>
//   <initial occupancy, L characters of 0/1>
//   <time> <bond>            one line per effective swap, strictly increasing time
//
// Reals are written with 17 significant digits so that parsing returns the
// identical double. Every line, including the last, ends in '\n'; a missing
// final newline is reported as truncation.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ssepwalk/errors.hpp"
#include "ssepwalk/ssep.hpp"

namespace ssepwalk {

inline constexpr std::string_view kLogMagic = "SSEPLOG";
inline constexpr int kLogVersion = 1;

namespace detail {

inline std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string format_hex(std::uint64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
    return "0x" + std::string(buf, res.ptr);
}

template <typename T>
bool parse_number(std::string_view token, T& out, int base = 10) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    std::from_chars_result res;
    if constexpr (std::is_floating_point_v<T>) {
        res = std::from_chars(first, last, out);
    } else {
        res = std::from_chars(first, last, out, base);
    }
    return res.ec == std::errc{} && res.ptr == last;
}

inline bool parse_hex(std::string_view token, std::uint64_t& out) {
    if (token.size() < 3 || token[0] != '0' || (token[1] != 'x' && token[1] != 'X')) return false;
    return parse_number(token.substr(2), out, 16);
}

inline std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

}  // namespace detail

inline void write_event_log(std::ostream& os, const EnvironmentEventLog& log) {
    os << kLogMagic << ' ' << kLogVersion << ' ' << log.lattice.L << ' ' << detail::format_real(log.rho) << ' '
       << detail::format_real(log.horizon) << ' ' << detail::format_hex(log.seed.master_seed) << ' '
       << log.seed.stream_id << '\n';
    os << log.initial.to_bits() << '\n';
    std::string line;
    for (const auto& ev : log.events) {
        line = detail::format_real(ev.time);
        line += ' ';
        line += std::to_string(ev.bond);
        line += '\n';
        os << line;
    }
}

inline std::string event_log_to_string(const EnvironmentEventLog& log) {
    std::ostringstream os;
    write_event_log(os, log);
    return os.str();
}

// Parses and validates a log. Throws MalformedLog with the offending line.
inline EnvironmentEventLog read_event_log(std::istream& is) {
    EnvironmentEventLog log;
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&](bool required) -> bool {
        if (!std::getline(is, line)) {
            if (required) throw MalformedLog(line_no + 1, "unexpected end of file");
            return false;
        }
        ++line_no;
        if (is.eof()) throw MalformedLog(line_no, "truncated line (no terminating newline)");
        return true;
    };

    next_line(true);
    const auto header = detail::split_spaces(line);
    if (header.size() != 7 || header[0] != kLogMagic) throw MalformedLog(line_no, "bad header");
    int version = 0;
    if (!detail::parse_number(header[1], version) || version != kLogVersion)
        throw MalformedLog(line_no, "unsupported version");
    if (!detail::parse_number(header[2], log.lattice.L) || log.lattice.L < 4 || log.lattice.L % 2 != 0)
        throw MalformedLog(line_no, "bad lattice size");
    if (!detail::parse_number(header[3], log.rho) || !(log.rho >= 0.0 && log.rho <= 1.0))
        throw MalformedLog(line_no, "bad density");
    if (!detail::parse_number(header[4], log.horizon) || !(log.horizon >= 0.0) || !std::isfinite(log.horizon))
        throw MalformedLog(line_no, "bad horizon");
    if (!detail::parse_hex(header[5], log.seed.master_seed)) throw MalformedLog(line_no, "bad master seed");
    if (!detail::parse_number(header[6], log.seed.stream_id)) throw MalformedLog(line_no, "bad stream id");

    next_line(true);
    if (static_cast<std::int64_t>(line.size()) != log.lattice.L ||
        !LatticeConfiguration::from_bits(line, log.initial))
        throw MalformedLog(line_no, "initial occupancy must be " + std::to_string(log.lattice.L) + " characters of 0/1");

    LatticeConfiguration state = log.initial;
    double prev = -1.0;
    while (next_line(false)) {
        const auto tokens = detail::split_spaces(line);
        SwapEvent ev;
        if (tokens.size() != 2 || !detail::parse_number(tokens[0], ev.time) ||
            !detail::parse_number(tokens[1], ev.bond))
            throw MalformedLog(line_no, "expected '<time> <bond>'");
        if (!std::isfinite(ev.time) || ev.time < 0.0 || ev.time > log.horizon)
            throw MalformedLog(line_no, "event time outside [0, T]");
        if (!(ev.time > prev)) throw MalformedLog(line_no, "event times not strictly increasing");
        if (ev.bond < 0 || ev.bond >= log.lattice.L) throw MalformedLog(line_no, "bond out of range");
        if (!state.swap_bond(ev.bond)) throw MalformedLog(line_no, "swap across equal occupancies");
        prev = ev.time;
        log.events.push_back(ev);
    }
    return log;
}

inline EnvironmentEventLog event_log_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_event_log(is);
}

}  // namespace ssepwalk

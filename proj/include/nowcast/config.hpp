#pragma once

#include "nowcast/csv.hpp"
#include "nowcast/detail/sha256.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/pipeline.hpp"

#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef NOWCAST_VERSION
#define NOWCAST_VERSION "0.1.0"
#endif

namespace nowcast {

inline constexpr const char* kVersion = NOWCAST_VERSION;

namespace detail {

[[nodiscard]] inline std::vector<double> parse_double_list(std::string_view key, std::string_view text) {
    std::vector<double> out;
    for (auto item : split(text, ',')) {
        double v = 0.0;
        if (!parse_double(item, v)) throw ConfigError(std::string(key) + ": bad number '" + std::string(item) + "'");
        out.push_back(v);
    }
    return out;
}

/// Comma list of weeks; `a-b` expands to an inclusive range.
[[nodiscard]] inline std::vector<int> parse_week_list(std::string_view key, std::string_view text) {
    std::vector<int> out;
    for (auto item : split(text, ',')) {
        const auto dash = item.find('-');
        int lo = 0;
        int hi = 0;
        const bool ok = dash == std::string_view::npos
                            ? parse_int(item, lo) && (hi = lo, true)
                            : parse_int(trim(item.substr(0, dash)), lo) && parse_int(trim(item.substr(dash + 1)), hi);
        if (!ok || hi < lo) throw ConfigError(std::string(key) + ": bad week item '" + std::string(item) + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
    }
    return out;
}

[[nodiscard]] inline std::string solver_name(QuantileSolver s) {
    switch (s) {
        case QuantileSolver::Auto: return "auto";
        case QuantileSolver::Simplex: return "simplex";
        case QuantileSolver::InteriorPoint: return "ipm";
    }
    return "auto";
}

[[nodiscard]] inline QuantileSolver parse_solver(std::string_view text) {
    if (text == "auto") return QuantileSolver::Auto;
    if (text == "simplex") return QuantileSolver::Simplex;
    if (text == "ipm") return QuantileSolver::InteriorPoint;
    throw ConfigError("solver: expected auto, simplex or ipm, got '" + std::string(text) + "'");
}

}  // namespace detail

inline const std::vector<std::string> kConfigKeys{"data_dir", "estimation_start", "eval_start", "eval_end",
                                                  "taus",     "lambda",           "specs",      "weci_transform",
                                                  "fit_density", "solver",        "weeks"};

/// Applies one key=value assignment; unknown keys and malformed values raise ConfigError naming the key.
inline void set_config_value(RunConfig& c, const std::string& key, std::string_view value) {
    auto integer = [&] {
        int v = 0;
        if (!detail::parse_int(value, v)) throw ConfigError(key + ": expected an integer, got '" + std::string(value) + "'");
        return v;
    };
    if (key == "data_dir") {
        c.data_dir = std::string(value);
    } else if (key == "estimation_start") {
        c.estimation_start = integer();
    } else if (key == "eval_start") {
        c.eval_start = integer();
    } else if (key == "eval_end") {
        c.eval_end = integer();
    } else if (key == "taus") {
        c.taus = detail::parse_double_list(key, value);
    } else if (key == "lambda") {
        if (!detail::parse_double(value, c.lambda)) throw ConfigError("lambda: bad number '" + std::string(value) + "'");
    } else if (key == "specs") {
        c.specs.clear();
        if (value == "all") {
            c.specs = all_model_specs();
        } else {
            for (auto name : detail::split(value, ',')) c.specs.push_back(parse_model_spec(name));
        }
    } else if (key == "weci_transform") {
        c.weci_transform = std::string(value);
    } else if (key == "fit_density") {
        if (value != "true" && value != "false") throw ConfigError("fit_density: expected true or false");
        c.fit_density = value == "true";
    } else if (key == "solver") {
        c.solver = detail::parse_solver(value);
    } else if (key == "weeks") {
        c.weeks = detail::parse_week_list(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

/// Flat `key = value` text; `#` starts a comment line. Repeated keys are rejected.
[[nodiscard]] inline RunConfig parse_run_config(std::istream& in, const std::string& source = "config") {
    RunConfig c;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto where = source + ":" + std::to_string(line_no) + ": ";
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key=value");
        const std::string key(detail::trim(text.substr(0, eq)));
        if (!seen.insert(key).second) throw ConfigError(where + "repeated config key '" + key + "'");
        try {
            set_config_value(c, key, detail::trim(text.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    c.validate();
    return c;
}

[[nodiscard]] inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open config '" + path + "'");
    return parse_run_config(in, path);
}

/// Every key in fixed order with normalized values; parsing it back yields the same config.
[[nodiscard]] inline std::string canonical_text(const RunConfig& c) {
    auto join = [](const auto& items, auto fmt) {
        std::string s;
        for (const auto& x : items) s += (s.empty() ? "" : ",") + fmt(x);
        return s;
    };
    std::ostringstream out;
    out << "data_dir=" << c.data_dir << '\n'
        << "estimation_start=" << c.estimation_start << '\n'
        << "eval_start=" << c.eval_start << '\n'
        << "eval_end=" << c.eval_end << '\n'
        << "taus=" << join(c.taus, [](double v) { return detail::format_double(v); }) << '\n'
        << "lambda=" << detail::format_double(c.lambda) << '\n'
        << "specs=" << join(c.specs, [](const ModelSpec& s) { return s.name(); }) << '\n'
        << "weci_transform=" << c.weci_transform << '\n'
        << "fit_density=" << (c.fit_density ? "true" : "false") << '\n'
        << "solver=" << detail::solver_name(c.solver) << '\n'
        << "weeks=" << join(c.weeks, [](int v) { return std::to_string(v); }) << '\n';
    return out.str();
}

/// SHA-256 of the canonical text, so equivalent configs share a hash.
[[nodiscard]] inline std::string config_hash(const RunConfig& c) { return detail::sha256_hex(canonical_text(c)); }

/// Comment line carried by every output file.
[[nodiscard]] inline std::string output_comment(const std::string& hash) {
    return "config_hash=" + hash + ",version=" + kVersion;
}

}  // namespace nowcast

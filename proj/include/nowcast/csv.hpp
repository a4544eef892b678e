#pragma once

#include "nowcast/errors.hpp"
#include "nowcast/panel.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nowcast {

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

[[nodiscard]] inline bool parse_int(std::string_view s, int& out) noexcept {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

[[nodiscard]] inline bool parse_double(std::string_view s, double& out) noexcept {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

/// Shortest round-trip text for a double; `nan` for missing.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Reads one variable file with header `entity,year,sub,value` (or `entity,year,value`
/// for annual data). Rows may come in any order; duplicates and interior gaps are
/// rejected. Weekly sub 53 is folded into week 52 by averaging the two weeks.
[[nodiscard]] inline std::vector<MixedFreqSeries> read_series_csv(std::istream& in, Frequency freq,
                                                                  const std::string& source = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) -> ParseError {
        return ParseError(source + ":" + std::to_string(lineno) + ": " + what);
    };

    bool have_header = false;
    bool has_sub = true;
    struct Cell {
        double value;
        std::size_t line;
    };
    std::map<std::string, std::map<PeriodIndex, Cell>> rows;
    std::map<std::string, std::map<int, Cell>> week53;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = detail::split(view);
        if (!have_header) {
            if (fields.size() == 4 && fields[0] == "entity" && fields[1] == "year" && fields[2] == "sub" &&
                fields[3] == "value") {
                has_sub = true;
            } else if (fields.size() == 3 && fields[0] == "entity" && fields[1] == "year" && fields[2] == "value" &&
                       freq == Frequency::Annual) {
                has_sub = false;
            } else {
                throw fail("expected header 'entity,year,sub,value'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != (has_sub ? 4u : 3u)) {
            throw fail("expected " + std::to_string(has_sub ? 4 : 3) + " fields, got " +
                       std::to_string(fields.size()));
        }
        const std::string entity(fields[0]);
        if (entity.empty()) throw fail("empty entity");
        PeriodIndex p{};
        if (!detail::parse_int(fields[1], p.year)) throw fail("bad year '" + std::string(fields[1]) + "'");
        if (has_sub) {
            if (fields[2].empty() && freq == Frequency::Annual) {
                p.sub = 1;
            } else if (!detail::parse_int(fields[2], p.sub)) {
                throw fail("bad sub '" + std::string(fields[2]) + "'");
            }
        }
        const std::string_view vtext = fields[has_sub ? 3 : 2];
        double value = kMissing;
        if (!vtext.empty() && vtext != "NA" && vtext != "nan") {
            if (!detail::parse_double(vtext, value)) throw fail("bad value '" + std::string(vtext) + "'");
        }
        if (freq == Frequency::Weekly && p.sub == 53) {
            if (!week53[entity].try_emplace(p.year, Cell{value, lineno}).second) {
                throw fail("duplicate (entity,year,sub) = (" + entity + "," + std::to_string(p.year) + ",53)");
            }
            continue;
        }
        if (!valid_period(p, freq)) {
            throw fail("sub " + std::to_string(p.sub) + " out of range for " + std::string(to_string(freq)) + " data");
        }
        auto [it, inserted] = rows[entity].try_emplace(p, Cell{value, lineno});
        if (!inserted) {
            throw fail("duplicate (entity,year,sub) = (" + entity + "," + std::to_string(p.year) + "," +
                       std::to_string(p.sub) + "), first seen on line " + std::to_string(it->second.line));
        }
    }
    if (!have_header) throw ParseError(source + ": empty file");

    for (const auto& [entity, years] : week53) {
        for (const auto& [year, cell] : years) {
            auto& cells = rows[entity];
            auto it = cells.find(PeriodIndex{year, 52});
            if (it == cells.end()) {
                lineno = cell.line;
                throw fail("week 53 of " + std::to_string(year) + " without a week 52 to merge into");
            }
            it->second.value = 0.5 * (it->second.value + cell.value);
        }
    }

    std::vector<MixedFreqSeries> out;
    for (auto& [entity, cells] : rows) {
        std::vector<double> values;
        values.reserve(cells.size());
        const PeriodIndex start = cells.begin()->first;
        long expected = ordinal(start, freq);
        for (const auto& [p, cell] : cells) {
            if (ordinal(p, freq) != expected) {
                lineno = cell.line;
                throw fail("entity '" + entity + "' has a gap before " + format_period(p, freq));
            }
            values.push_back(cell.value);
            ++expected;
        }
        try {
            out.emplace_back(entity, freq, start, std::move(values));
        } catch (const Error& e) {
            throw ParseError(source + ": " + e.what());
        }
    }
    return out;
}

[[nodiscard]] inline std::vector<MixedFreqSeries> read_series_csv_file(const std::string& path, Frequency freq) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return read_series_csv(in, freq, path);
}

/// Writes series in the canonical `entity,year,sub,value` layout.
inline void write_series_csv(std::ostream& out, const std::map<std::string, MixedFreqSeries>& series) {
    out << "entity,year,sub,value\n";
    for (const auto& [entity, s] : series) {
        const std::size_t n = s.observed_size();
        for (std::size_t k = 0; k < n; ++k) {
            const PeriodIndex p = s.period_at(k);
            out << entity << ',' << p.year << ',' << p.sub << ',' << detail::format_double(s.values()[k]) << '\n';
        }
    }
}

}  // namespace nowcast

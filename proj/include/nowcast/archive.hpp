#pragma once

#include "nowcast/csv.hpp"
#include "nowcast/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace nowcast {

/// Keys of the density parameter rows stored next to the quantile rows.
namespace archive_keys {
inline const std::string kPoint = "point";
inline const std::string kMu = "mu";
inline const std::string kSigma = "sigma";
inline const std::string kAlpha = "alpha";
inline const std::string kNu = "nu";
}  // namespace archive_keys

/// One archived prediction. `key` is `point`, a quantile level, or a density parameter name.
struct ArchiveRow {
    std::string spec;
    std::string variable;
    std::string entity;
    int target_year = 0;
    int week = 1;
    std::string key;
    double prediction = 0.0;
    double benchmark = 0.0;
    double realized = 0.0;  ///< NaN when the outcome is not in the data
};

/// A (year, week, spec) cell, or one entity of it, that produced no prediction.
struct GapRecord {
    std::string spec;
    std::string variable;
    std::string entity;  ///< empty when the whole cell failed
    int target_year = 0;
    int week = 1;
    std::string message;
};

struct NowcastArchive {
    std::vector<ArchiveRow> rows;
    std::vector<GapRecord> gaps;

    void append(NowcastArchive&& other) {
        rows.insert(rows.end(), std::make_move_iterator(other.rows.begin()), std::make_move_iterator(other.rows.end()));
        gaps.insert(gaps.end(), std::make_move_iterator(other.gaps.begin()), std::make_move_iterator(other.gaps.end()));
    }
};

[[nodiscard]] inline bool is_quantile_key(const std::string& key) {
    double tau = 0.0;
    return detail::parse_double(key, tau) && tau > 0.0 && tau < 1.0;
}

inline constexpr const char* kArchiveHeader = "spec,variable,entity,target_year,week,tau_or_point,prediction,benchmark,realized";

/// Full-precision archive export; `comment` (without the leading '#') opens the file when nonempty.
inline void write_archive_csv(std::ostream& out, const std::vector<ArchiveRow>& rows, const std::string& comment = {}) {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << kArchiveHeader << '\n';
    for (const auto& r : rows) {
        out << r.spec << ',' << r.variable << ',' << r.entity << ',' << r.target_year << ',' << r.week << ',' << r.key
            << ',' << detail::format_double(r.prediction) << ',' << detail::format_double(r.benchmark) << ','
            << detail::format_double(r.realized) << '\n';
    }
}

inline void write_gaps_csv(std::ostream& out, const std::vector<GapRecord>& gaps, const std::string& comment = {}) {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "spec,variable,entity,target_year,week,message\n";
    for (const auto& g : gaps) {
        std::string msg = g.message;
        for (char& ch : msg) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        out << g.spec << ',' << g.variable << ',' << g.entity << ',' << g.target_year << ',' << g.week << ',' << msg
            << '\n';
    }
}

[[nodiscard]] inline std::vector<ArchiveRow> read_archive_csv(std::istream& in, const std::string& source = "archive") {
    std::vector<ArchiveRow> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto where = source + ":" + std::to_string(line_no);
        if (!header_seen) {
            if (text != kArchiveHeader) throw ParseError(where + ": expected header " + kArchiveHeader);
            header_seen = true;
            continue;
        }
        const auto f = detail::split(text, ',');
        if (f.size() != 9) throw ParseError(where + ": expected 9 fields, got " + std::to_string(f.size()));
        ArchiveRow r;
        r.spec = std::string(f[0]);
        r.variable = std::string(f[1]);
        r.entity = std::string(f[2]);
        r.key = std::string(f[5]);
        auto number = [&](std::string_view s, double& out) {
            if (s == "nan") {
                out = std::nan("");
                return true;
            }
            return detail::parse_double(s, out);
        };
        if (!detail::parse_int(f[3], r.target_year) || !detail::parse_int(f[4], r.week) ||
            !number(f[6], r.prediction) || !number(f[7], r.benchmark) || !number(f[8], r.realized)) {
            throw ParseError(where + ": malformed number");
        }
        rows.push_back(std::move(r));
    }
    if (!header_seen) throw ParseError(source + ": missing archive header");
    return rows;
}

}  // namespace nowcast

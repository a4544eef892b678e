#pragma once

#include "nowcast/csv.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/panel.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace nowcast {

/// Prediction weeks per year; weeks 49-52 are not prediction dates.
inline constexpr int kCalendarWeeks = 48;
/// Weeks 1..4 backcast the previous year's figure.
inline constexpr int kLastBackcastWeek = 4;

enum class Phase { Backcast, Nowcast };

[[nodiscard]] inline std::string_view to_string(Phase p) noexcept {
    return p == Phase::Backcast ? "Backcast" : "Nowcast";
}

[[nodiscard]] constexpr Phase phase_of(int week) noexcept {
    return week <= kLastBackcastWeek ? Phase::Backcast : Phase::Nowcast;
}

/// Weeks [week_from, week_to] see period (t + year_offset, sub) of the variable.
struct ScheduleSegment {
    int week_from = 1;
    int week_to = kCalendarWeeks;
    int year_offset = 0;
    int sub = 1;
};

/// Piecewise-constant availability schedule of one variable over the prediction weeks.
struct ReleaseRule {
    std::string variable;
    Frequency frequency = Frequency::Annual;
    std::vector<ScheduleSegment> segments;

    /// Segments must tile 1..48 in order, stay within the period bounds, never reach
    /// past the prediction date, and never move backwards.
    void validate() const {
        const int ppy = periods_per_year(frequency);
        int next_week = 1;
        long prev = std::numeric_limits<long>::min();
        for (const auto& s : segments) {
            if (s.week_from != next_week || s.week_to < s.week_from || s.week_to > kCalendarWeeks) {
                throw ConfigError("schedule for '" + variable + "' must cover weeks 1.." +
                                  std::to_string(kCalendarWeeks) + " contiguously; bad segment at week " +
                                  std::to_string(s.week_from));
            }
            if (s.sub < 1 || s.sub > ppy) {
                throw ConfigError("schedule for '" + variable + "': sub " + std::to_string(s.sub) +
                                  " outside 1.." + std::to_string(ppy));
            }
            // Period end, in weeks relative to the start of year t, must not pass week_from.
            if (static_cast<long>(s.year_offset) * 52 * ppy + static_cast<long>(s.sub) * 52 >
                static_cast<long>(s.week_from) * ppy) {
                throw ConfigError("schedule for '" + variable + "' releases a period that ends after week " +
                                  std::to_string(s.week_from));
            }
            const long rel = static_cast<long>(s.year_offset) * ppy + (s.sub - 1);
            if (rel < prev) {
                throw ConfigError("schedule for '" + variable + "' loses data at week " +
                                  std::to_string(s.week_from));
            }
            prev = rel;
            next_week = s.week_to + 1;
        }
        if (next_week != kCalendarWeeks + 1) {
            throw ConfigError("schedule for '" + variable + "' stops before week " + std::to_string(kCalendarWeeks));
        }
    }

    [[nodiscard]] PeriodIndex latest(int year, int week) const {
        for (const auto& s : segments) {
            if (week >= s.week_from && week <= s.week_to) return PeriodIndex{year + s.year_offset, s.sub};
        }
        throw DomainError("week " + std::to_string(week) + " not covered by schedule for '" + variable + "'");
    }
};

/// Canonical variable names of the default release calendar.
namespace vars {
inline const std::string kCO2 = "CO2";
inline const std::string kEC = "EC";
inline const std::string kPI = "PI";
inline const std::string kELEC = "ELEC";
inline const std::string kWECI = "WECI";
}  // namespace vars

/// The default weekly calendar: CO2, EC annual; PI quarterly; ELEC monthly; WECI weekly.
[[nodiscard]] inline std::vector<ReleaseRule> table2_rules() {
    std::vector<ReleaseRule> rules;
    rules.push_back({vars::kCO2, Frequency::Annual, {{1, 8, -4, 1}, {9, 48, -3, 1}}});
    rules.push_back({vars::kEC, Frequency::Annual, {{1, 20, -3, 1}, {21, 48, -2, 1}}});
    rules.push_back({vars::kPI,
                     Frequency::Quarterly,
                     {{1, 8, -1, 3}, {9, 20, -1, 4}, {21, 32, 0, 1}, {33, 44, 0, 2}, {45, 48, 0, 3}}});
    ReleaseRule elec{vars::kELEC, Frequency::Monthly, {{1, 4, -1, 11}, {5, 8, -1, 12}}};
    for (int m = 1; m <= 10; ++m) elec.segments.push_back({4 * m + 5, 4 * m + 8, 0, m});
    rules.push_back(std::move(elec));
    ReleaseRule weci{vars::kWECI, Frequency::Weekly, {}};
    for (int v = 1; v <= kCalendarWeeks; ++v) {
        weci.segments.push_back(v <= 4 ? ScheduleSegment{v, v, -1, 48 + v} : ScheduleSegment{v, v, 0, v - 4});
    }
    rules.push_back(std::move(weci));
    return rules;
}

/// Latest available period of every variable at prediction date (year, week).
struct InformationSet {
    int year = 0;
    int week = 1;
    Phase phase = Phase::Backcast;
    std::map<std::string, PeriodIndex> latest;
    std::map<std::string, Frequency> frequency;

    [[nodiscard]] bool contains(const std::string& variable) const { return latest.contains(variable); }

    [[nodiscard]] PeriodIndex at(const std::string& variable) const {
        auto it = latest.find(variable);
        if (it == latest.end()) throw UnknownVariableError("variable '" + variable + "' has no release rule");
        return it->second;
    }

    /// Years between the prediction year and the latest available year (d_v, g_v).
    [[nodiscard]] int annual_lag(const std::string& variable) const { return year - at(variable).year; }

    /// Periods between the end of year t and the latest available period (q_v, m_v, w_v).
    [[nodiscard]] long period_lag(const std::string& variable) const {
        const Frequency f = frequency.at(variable);
        return ordinal(year_end(year, f), f) - ordinal(at(variable), f);
    }
};

[[nodiscard]] inline InformationSet information_set(const std::vector<ReleaseRule>& rules, int year, int week) {
    if (week < 1 || week > kCalendarWeeks) {
        throw DomainError("calendar week " + std::to_string(week) + " outside 1.." + std::to_string(kCalendarWeeks));
    }
    InformationSet info{year, week, phase_of(week), {}, {}};
    for (const auto& rule : rules) {
        info.latest[rule.variable] = rule.latest(year, week);
        info.frequency[rule.variable] = rule.frequency;
    }
    return info;
}

/// Cuts every series at its latest available period. Variables without a rule are an error.
[[nodiscard]] inline PanelDataset truncate(const PanelDataset& dataset, const InformationSet& info) {
    PanelDataset out;
    for (const auto& variable : dataset.variables()) {
        if (!info.contains(variable)) {
            throw UnknownVariableError("variable '" + variable + "' has no release rule");
        }
        if (info.frequency.at(variable) != dataset.frequency(variable)) {
            throw ConfigError("variable '" + variable + "' is " + std::string(to_string(dataset.frequency(variable))) +
                              " but its release rule is " + std::string(to_string(info.frequency.at(variable))));
        }
        const PeriodIndex last = info.at(variable);
        for (const auto& [entity, series] : dataset.series_of(variable)) out.add(variable, series.truncated_at(last));
    }
    return out;
}

/// Replaces the schedules of the named variables from CSV `variable,week_from,week_to,year_offset,sub`.
/// Only variables already present in `base` can be overridden; their frequency is kept.
[[nodiscard]] inline std::vector<ReleaseRule> apply_schedule_overrides(std::vector<ReleaseRule> base,
                                                                       std::istream& in,
                                                                       const std::string& source = "schedule") {
    std::map<std::string, std::vector<ScheduleSegment>> replaced;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto fields = detail::split(text, ',');
        const auto where = source + ":" + std::to_string(line_no);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() != 5 || fields[0] != "variable" || fields[1] != "week_from" ||
                fields[2] != "week_to" || fields[3] != "year_offset" || fields[4] != "sub") {
                throw ParseError(where + ": expected header variable,week_from,week_to,year_offset,sub");
            }
            continue;
        }
        if (fields.size() != 5) throw ParseError(where + ": expected 5 fields");
        ScheduleSegment seg;
        if (!detail::parse_int(fields[1], seg.week_from) || !detail::parse_int(fields[2], seg.week_to) ||
            !detail::parse_int(fields[3], seg.year_offset) || !detail::parse_int(fields[4], seg.sub)) {
            throw ParseError(where + ": expected integer week_from, week_to, year_offset, sub");
        }
        replaced[std::string(fields[0])].push_back(seg);
    }
    for (auto& [variable, segments] : replaced) {
        auto it = std::find_if(base.begin(), base.end(), [&](const ReleaseRule& r) { return r.variable == variable; });
        if (it == base.end()) throw UnknownVariableError(source + ": no release rule for variable '" + variable + "'");
        std::sort(segments.begin(), segments.end(),
                  [](const ScheduleSegment& a, const ScheduleSegment& b) { return a.week_from < b.week_from; });
        it->segments = std::move(segments);
        it->validate();
    }
    return base;
}

/// One CSV row per prediction week: phase,week,date, then the latest period of each rule.
inline void print_calendar(std::ostream& out, const std::vector<ReleaseRule>& rules, int year) {
    out << "phase,week,date";
    for (const auto& rule : rules) out << ',' << rule.variable;
    out << '\n';
    for (int v = 1; v <= kCalendarWeeks; ++v) {
        const auto info = information_set(rules, year, v);
        out << to_string(info.phase) << ',' << v << ',' << format_period({year, v}, Frequency::Weekly);
        for (const auto& rule : rules) out << ',' << format_period(info.at(rule.variable), rule.frequency);
        out << '\n';
    }
}

}  // namespace nowcast

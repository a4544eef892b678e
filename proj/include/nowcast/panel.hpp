#pragma once

#include "nowcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nowcast {

enum class Frequency { Annual, Quarterly, Monthly, Weekly };

/// Subperiods per year. Weeks use a fixed 52-week year.
[[nodiscard]] constexpr int periods_per_year(Frequency f) noexcept {
    switch (f) {
        case Frequency::Annual: return 1;
        case Frequency::Quarterly: return 4;
        case Frequency::Monthly: return 12;
        case Frequency::Weekly: return 52;
    }
    return 1;
}

[[nodiscard]] inline std::string_view to_string(Frequency f) noexcept {
    switch (f) {
        case Frequency::Annual: return "annual";
        case Frequency::Quarterly: return "quarterly";
        case Frequency::Monthly: return "monthly";
        case Frequency::Weekly: return "weekly";
    }
    return "annual";
}

[[nodiscard]] inline Frequency parse_frequency(std::string_view text) {
    if (text == "annual" || text == "A") return Frequency::Annual;
    if (text == "quarterly" || text == "Q") return Frequency::Quarterly;
    if (text == "monthly" || text == "M") return Frequency::Monthly;
    if (text == "weekly" || text == "W") return Frequency::Weekly;
    throw ParseError("unknown frequency '" + std::string(text) + "'");
}

/// A (year, subperiod) pair; `sub` is 1-based within the year.
struct PeriodIndex {
    int year = 0;
    int sub = 1;

    friend constexpr auto operator<=>(const PeriodIndex&, const PeriodIndex&) = default;
};

[[nodiscard]] constexpr bool valid_period(PeriodIndex p, Frequency f) noexcept {
    return p.sub >= 1 && p.sub <= periods_per_year(f);
}

/// Number of periods since year 0, sub 1.
[[nodiscard]] constexpr long ordinal(PeriodIndex p, Frequency f) noexcept {
    return static_cast<long>(p.year) * periods_per_year(f) + (p.sub - 1);
}

[[nodiscard]] constexpr PeriodIndex from_ordinal(long o, Frequency f) noexcept {
    const long ppy = periods_per_year(f);
    long year = o / ppy;
    long rem = o % ppy;
    if (rem < 0) {
        rem += ppy;
        --year;
    }
    return PeriodIndex{static_cast<int>(year), static_cast<int>(rem) + 1};
}

[[nodiscard]] constexpr PeriodIndex advance(PeriodIndex p, long n, Frequency f) noexcept {
    return from_ordinal(ordinal(p, f) + n, f);
}

/// Last subperiod of `year` at frequency `f`.
[[nodiscard]] constexpr PeriodIndex year_end(int year, Frequency f) noexcept {
    return PeriodIndex{year, periods_per_year(f)};
}

/// Formats as `2017`, `2020:Q3`, `2020:M11` or `2020:W49`.
[[nodiscard]] inline std::string format_period(PeriodIndex p, Frequency f) {
    std::string out = std::to_string(p.year);
    switch (f) {
        case Frequency::Annual: break;
        case Frequency::Quarterly: out += ":Q" + std::to_string(p.sub); break;
        case Frequency::Monthly: out += ":M" + std::to_string(p.sub); break;
        case Frequency::Weekly: out += ":W" + std::to_string(p.sub); break;
    }
    return out;
}

[[nodiscard]] inline bool is_missing(double v) noexcept { return std::isnan(v); }

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One entity's observations of one variable at a fixed frequency.
///
/// Value k belongs to `start` advanced by k periods. Missing values (NaN) may
/// only appear as a contiguous tail; interior gaps are rejected.
class MixedFreqSeries {
public:
    MixedFreqSeries() = default;

    MixedFreqSeries(std::string entity, Frequency freq, PeriodIndex start, std::vector<double> values)
        : entity_(std::move(entity)), freq_(freq), start_(start), values_(std::move(values)) {
        if (!valid_period(start_, freq_)) {
            throw DomainError("series '" + entity_ + "': start subperiod " + std::to_string(start_.sub) +
                              " out of range for " + std::string(to_string(freq_)) + " data");
        }
        bool in_tail = false;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (is_missing(values_[k])) {
                in_tail = true;
            } else if (in_tail) {
                throw CoverageError("series '" + entity_ + "': interior missing value before " +
                                    format_period(period_at(k), freq_));
            }
        }
    }

    [[nodiscard]] const std::string& entity() const noexcept { return entity_; }
    [[nodiscard]] Frequency frequency() const noexcept { return freq_; }
    [[nodiscard]] PeriodIndex start() const noexcept { return start_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

    [[nodiscard]] PeriodIndex period_at(std::size_t k) const noexcept {
        return advance(start_, static_cast<long>(k), freq_);
    }

    /// Number of leading non-missing values.
    [[nodiscard]] std::size_t observed_size() const noexcept {
        std::size_t n = values_.size();
        while (n > 0 && is_missing(values_[n - 1])) --n;
        return n;
    }

    [[nodiscard]] std::optional<PeriodIndex> last_observed() const noexcept {
        const std::size_t n = observed_size();
        if (n == 0) return std::nullopt;
        return period_at(n - 1);
    }

    /// Value at `p`, or nullopt when outside the span or missing.
    [[nodiscard]] std::optional<double> value_at(PeriodIndex p) const noexcept {
        const long k = ordinal(p, freq_) - ordinal(start_, freq_);
        if (k < 0 || k >= static_cast<long>(values_.size())) return std::nullopt;
        const double v = values_[static_cast<std::size_t>(k)];
        if (is_missing(v)) return std::nullopt;
        return v;
    }

    /// Copy holding only periods up to and including `last`.
    [[nodiscard]] MixedFreqSeries truncated_at(PeriodIndex last) const {
        const long keep = ordinal(last, freq_) - ordinal(start_, freq_) + 1;
        MixedFreqSeries out = *this;
        if (keep <= 0) {
            out.values_.clear();
        } else if (keep < static_cast<long>(values_.size())) {
            out.values_.resize(static_cast<std::size_t>(keep));
        }
        return out;
    }

private:
    std::string entity_;
    Frequency freq_ = Frequency::Annual;
    PeriodIndex start_{};
    std::vector<double> values_;
};

/// Variables x entities panel. Every series of a variable shares one frequency.
class PanelDataset {
public:
    void add(const std::string& variable, MixedFreqSeries series) {
        auto [it, inserted] = variables_.try_emplace(variable, Block{series.frequency(), {}});
        if (!inserted && it->second.frequency != series.frequency()) {
            throw DomainError("variable '" + variable + "' is " + std::string(to_string(it->second.frequency)) +
                              " but series for '" + series.entity() + "' is " +
                              std::string(to_string(series.frequency())));
        }
        entities_.insert(series.entity());
        const std::string entity = series.entity();
        if (!it->second.series.try_emplace(entity, std::move(series)).second) {
            throw DomainError("duplicate series for variable '" + variable + "', entity '" + entity + "'");
        }
    }

    /// Replace (or insert) a series.
    void put(const std::string& variable, MixedFreqSeries series) {
        auto it = variables_.find(variable);
        if (it != variables_.end()) it->second.series.erase(series.entity());
        add(variable, std::move(series));
    }

    [[nodiscard]] bool has_variable(const std::string& variable) const {
        return variables_.contains(variable);
    }

    [[nodiscard]] Frequency frequency(const std::string& variable) const { return block(variable).frequency; }

    [[nodiscard]] const MixedFreqSeries* find(const std::string& variable, const std::string& entity) const {
        auto it = variables_.find(variable);
        if (it == variables_.end()) return nullptr;
        auto jt = it->second.series.find(entity);
        return jt == it->second.series.end() ? nullptr : &jt->second;
    }

    [[nodiscard]] const MixedFreqSeries& series(const std::string& variable, const std::string& entity) const {
        const auto* s = find(variable, entity);
        if (s == nullptr) {
            throw CoverageError("no series for variable '" + variable + "', entity '" + entity + "'");
        }
        return *s;
    }

    [[nodiscard]] std::optional<double> value(const std::string& variable, const std::string& entity,
                                              PeriodIndex p) const {
        const auto* s = find(variable, entity);
        return s == nullptr ? std::nullopt : s->value_at(p);
    }

    /// All series of a variable keyed by entity.
    [[nodiscard]] const std::map<std::string, MixedFreqSeries>& series_of(const std::string& variable) const {
        return block(variable).series;
    }

    [[nodiscard]] const std::set<std::string>& entities() const noexcept { return entities_; }

    [[nodiscard]] std::vector<std::string> variables() const {
        std::vector<std::string> out;
        out.reserve(variables_.size());
        for (const auto& [name, _] : variables_) out.push_back(name);
        return out;
    }

private:
    struct Block {
        Frequency frequency;
        std::map<std::string, MixedFreqSeries> series;
    };

    const Block& block(const std::string& variable) const {
        auto it = variables_.find(variable);
        if (it == variables_.end()) throw UnknownVariableError("unknown variable '" + variable + "'");
        return it->second;
    }

    std::map<std::string, Block> variables_;
    std::set<std::string> entities_;
};

/// Year-on-year log difference: out(p) = ln x(p) - ln x(p - 1 year).
[[nodiscard]] inline MixedFreqSeries yoy_log_growth(const MixedFreqSeries& series) {
    const auto ppy = static_cast<std::size_t>(periods_per_year(series.frequency()));
    const std::size_t n = series.observed_size();
    if (n <= ppy) {
        throw LengthError("series '" + series.entity() + "' has " + std::to_string(n) +
                          " observations; year-on-year growth needs more than " + std::to_string(ppy));
    }
    const auto v = series.values();
    for (std::size_t k = 0; k < n; ++k) {
        if (!(v[k] > 0.0)) {
            throw DomainError("series '" + series.entity() + "': nonpositive level " + std::to_string(v[k]) +
                              " at " + format_period(series.period_at(k), series.frequency()));
        }
    }
    std::vector<double> out(n - ppy);
    for (std::size_t k = ppy; k < n; ++k) out[k - ppy] = std::log(v[k]) - std::log(v[k - ppy]);
    return MixedFreqSeries(series.entity(), series.frequency(), series.period_at(ppy), std::move(out));
}

/// Year-on-year difference in levels, for indices that can be negative.
[[nodiscard]] inline MixedFreqSeries yoy_difference(const MixedFreqSeries& series) {
    const auto ppy = static_cast<std::size_t>(periods_per_year(series.frequency()));
    const std::size_t n = series.observed_size();
    if (n <= ppy) {
        throw LengthError("series '" + series.entity() + "' too short for a year-on-year difference");
    }
    const auto v = series.values();
    std::vector<double> out(n - ppy);
    for (std::size_t k = ppy; k < n; ++k) out[k - ppy] = v[k] - v[k - ppy];
    return MixedFreqSeries(series.entity(), series.frequency(), series.period_at(ppy), std::move(out));
}

/// Divides each value by the same year's population (step broadcast to subperiods).
[[nodiscard]] inline MixedFreqSeries per_capita(const MixedFreqSeries& values, const MixedFreqSeries& population) {
    if (population.frequency() != Frequency::Annual) {
        throw DomainError("population for '" + population.entity() + "' must be annual");
    }
    const std::size_t n = values.observed_size();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const PeriodIndex p = values.period_at(k);
        const auto pop = population.value_at(PeriodIndex{p.year, 1});
        if (!pop) {
            throw CoverageError("no population for entity '" + values.entity() + "' in year " +
                                std::to_string(p.year));
        }
        if (!(*pop > 0.0)) {
            throw DomainError("nonpositive population for entity '" + values.entity() + "' in year " +
                              std::to_string(p.year));
        }
        out[k] = values.values()[k] / *pop;
    }
    return MixedFreqSeries(values.entity(), values.frequency(), values.start(), std::move(out));
}

/// [v(asof), v(asof-1), ..., v(asof-count+1)], newest first.
[[nodiscard]] inline std::vector<double> lag_vector(const MixedFreqSeries& series, PeriodIndex asof,
                                                    std::size_t count) {
    if (count == 0) throw LengthError("lag_vector: count must be at least 1");
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        const PeriodIndex p = advance(asof, -static_cast<long>(j), series.frequency());
        const auto v = series.value_at(p);
        if (!v) {
            throw CoverageError("series '" + series.entity() + "' has no value at " +
                                format_period(p, series.frequency()) + " (lag window ending " +
                                format_period(asof, series.frequency()) + ")");
        }
        out[j] = *v;
    }
    return out;
}

struct CrossSectionMean {
    double mean = 0.0;
    std::size_t contributors = 0;
};

/// Mean over the entities that have `variable` at `period`.
[[nodiscard]] inline CrossSectionMean cross_section_mean(const PanelDataset& dataset, const std::string& variable,
                                                         PeriodIndex period) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [entity, series] : dataset.series_of(variable)) {
        if (const auto v = series.value_at(period)) {
            sum += *v;
            ++count;
        }
    }
    if (count == 0) {
        throw CoverageError("no entity has '" + variable + "' at " +
                            format_period(period, dataset.frequency(variable)));
    }
    return {sum / static_cast<double>(count), count};
}

}  // namespace nowcast

#pragma once

#include "nowcast/archive.hpp"
#include "nowcast/calendar.hpp"
#include "nowcast/detail/empirical_quantile.hpp"
#include "nowcast/errors.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace nowcast {

/// Check loss rho_tau(u) = u (tau - 1{u < 0}) with u = realized - quantile; never negative.
[[nodiscard]] inline double pinball(double u, double tau) noexcept {
    return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

using EntityScores = std::map<std::string, double>;

namespace detail {

inline void require_scorable(const ArchiveRow& r) {
    if (std::isnan(r.realized) || std::isnan(r.prediction)) {
        throw ScoringError("no realized value or prediction for " + r.spec + " " + r.variable + " " + r.entity + " " +
                           std::to_string(r.target_year) + " week " + std::to_string(r.week) + " key " + r.key);
    }
}

/// Mean over years of `loss(row)` per entity.
template <class Loss>
EntityScores mean_by_entity(const std::vector<ArchiveRow>& rows, Loss loss) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        require_scorable(r);
        auto& [sum, n] = acc[r.entity];
        sum += loss(r);
        ++n;
    }
    EntityScores out;
    for (const auto& [entity, a] : acc) out[entity] = a.first / a.second;
    return out;
}

[[nodiscard]] inline double entity_mean(const EntityScores& s) {
    if (s.empty()) throw ScoringError("no rows to score");
    double total = 0.0;
    for (const auto& [entity, v] : s) total += v;
    return total / static_cast<double>(s.size());
}

[[nodiscard]] inline bool key_is_tau(const std::string& key, double tau) {
    double k = 0.0;
    return parse_double(key, k) && std::abs(k - tau) < 1e-12;
}

}  // namespace detail

/// Per-entity root mean squared error over the years present in `rows`.
[[nodiscard]] inline EntityScores rmsfe_by_entity(const std::vector<ArchiveRow>& rows) {
    auto mse = detail::mean_by_entity(rows, [](const ArchiveRow& r) {
        const double err = r.realized - r.prediction;
        return err * err;
    });
    for (auto& [entity, v] : mse) v = std::sqrt(v);
    return mse;
}

/// Mean over entities of the per-entity RMSE (mean of roots, not root of means).
[[nodiscard]] inline double rmsfe(const std::vector<ArchiveRow>& rows) {
    return detail::entity_mean(rmsfe_by_entity(rows));
}

/// Per-entity mean pinball loss; every row's prediction is read as the tau-quantile.
[[nodiscard]] inline EntityScores quantile_score_by_entity(const std::vector<ArchiveRow>& rows, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
    return detail::mean_by_entity(rows, [tau](const ArchiveRow& r) { return pinball(r.realized - r.prediction, tau); });
}

[[nodiscard]] inline double quantile_score(const std::vector<ArchiveRow>& rows, double tau) {
    return detail::entity_mean(quantile_score_by_entity(rows, tau));
}

/// (1/J) sum_j w_j QS_j per entity, where QS_j uses the rows keyed by taus[j]. Empty weights mean all ones.
[[nodiscard]] inline EntityScores crps_by_entity(const std::vector<ArchiveRow>& rows, const std::vector<double>& taus,
                                                 const std::vector<double>& weights = {}) {
    if (taus.empty()) throw ScoringError("CRPS needs at least one quantile level");
    if (!weights.empty() && weights.size() != taus.size()) {
        throw ScoringError("CRPS weights and quantile levels differ in length");
    }
    EntityScores out;
    std::optional<std::set<std::string>> entities;
    for (std::size_t j = 0; j < taus.size(); ++j) {
        std::vector<ArchiveRow> at_tau;
        for (const auto& r : rows) {
            if (detail::key_is_tau(r.key, taus[j])) at_tau.push_back(r);
        }
        if (at_tau.empty()) {
            throw ScoringError("no quantile rows at level " + detail::format_double(taus[j]) +
                               "; CRPS requires quantile predictions");
        }
        const auto qs = quantile_score_by_entity(at_tau, taus[j]);
        std::set<std::string> names;
        for (const auto& [entity, v] : qs) names.insert(entity);
        if (entities && *entities != names) throw ScoringError("entity sets differ across quantile levels");
        entities = names;
        const double w = weights.empty() ? 1.0 : weights[j];
        for (const auto& [entity, v] : qs) out[entity] += w * v;
    }
    for (auto& [entity, v] : out) v /= static_cast<double>(taus.size());
    return out;
}

[[nodiscard]] inline double crps(const std::vector<ArchiveRow>& rows, const std::vector<double>& taus,
                                 const std::vector<double>& weights = {}) {
    return detail::entity_mean(crps_by_entity(rows, taus, weights));
}

inline constexpr std::array<double, 5> kCrossSectionLevels{0.10, 0.25, 0.50, 0.75, 0.90};

/// Model score relative to a benchmark: aggregate ratio and the spread of per-entity ratios.
struct RelativeScore {
    double model = 0.0;      ///< mean over entities of the model score
    double benchmark = 0.0;  ///< mean over entities of the benchmark score
    double aggregate = 0.0;  ///< model / benchmark
    std::array<double, 5> quantiles{};  ///< type-7 quantiles of per-entity ratios at kCrossSectionLevels
};

[[nodiscard]] inline RelativeScore relative_and_distribution(const EntityScores& model, const EntityScores& benchmark) {
    if (model.size() != benchmark.size()) throw ScoringError("model and benchmark cover different entity sets");
    std::vector<double> ratios;
    ratios.reserve(model.size());
    for (const auto& [entity, v] : model) {
        const auto it = benchmark.find(entity);
        if (it == benchmark.end()) throw ScoringError("entity " + entity + " has no benchmark score");
        if (it->second == 0.0) throw ScoringError("benchmark score is zero for entity " + entity + "; ratio undefined");
        ratios.push_back(v / it->second);
    }
    RelativeScore out;
    out.model = detail::entity_mean(model);
    out.benchmark = detail::entity_mean(benchmark);
    if (out.benchmark == 0.0) throw ScoringError("aggregate benchmark score is zero; ratio undefined");
    out.aggregate = out.model / out.benchmark;
    for (std::size_t k = 0; k < kCrossSectionLevels.size(); ++k) {
        out.quantiles[k] = detail::type7_quantile(ratios, kCrossSectionLevels[k]);
    }
    return out;
}

enum class Metric { RMSFE, QS, CRPS };

[[nodiscard]] inline Metric parse_metric(const std::string& name) {
    if (name == "rmsfe") return Metric::RMSFE;
    if (name == "qs") return Metric::QS;
    if (name == "crps") return Metric::CRPS;
    throw ConfigError("unknown metric '" + name + "' (expected rmsfe, qs or crps)");
}

struct ScoreRequest {
    Metric metric = Metric::RMSFE;
    std::vector<double> taus{0.25, 0.5, 0.75};  ///< QS uses taus.front(); CRPS uses all
    std::string relative_to = "HistMean";
};

/// One (spec, week) line of a relative score table.
struct ScoreTableRow {
    std::string spec;
    int week = 1;
    Phase phase = Phase::Backcast;
    RelativeScore score;
};

namespace detail {

[[nodiscard]] inline EntityScores score_rows(const std::vector<ArchiveRow>& rows, const ScoreRequest& req) {
    switch (req.metric) {
    case Metric::RMSFE:
        return rmsfe_by_entity(rows);
    case Metric::QS: {
        std::vector<ArchiveRow> at_tau;
        for (const auto& r : rows) {
            if (key_is_tau(r.key, req.taus.front())) at_tau.push_back(r);
        }
        if (at_tau.empty()) {
            throw ScoringError("no quantile rows at level " + format_double(req.taus.front()) +
                               "; the quantile score requires quantile predictions");
        }
        return quantile_score_by_entity(at_tau, req.taus.front());
    }
    case Metric::CRPS:
        return crps_by_entity(rows, req.taus);
    }
    throw ScoringError("unknown metric");
}

[[nodiscard]] inline bool metric_row(const ArchiveRow& r, Metric m) {
    return m == Metric::RMSFE ? (r.variable == vars::kEC && r.key == archive_keys::kPoint)
                              : (r.variable == vars::kCO2 && is_quantile_key(r.key));
}

}  // namespace detail

/// Relative score table per (spec, week). The reference spec's own rows form the benchmark; when it is
/// HistMean and absent from `rows`, the archived benchmark column (the same historical-mean prediction) is used.
[[nodiscard]] inline std::vector<ScoreTableRow> score_table(const std::vector<ArchiveRow>& rows,
                                                            const ScoreRequest& req) {
    if (req.metric != Metric::RMSFE && req.taus.empty()) throw ConfigError("quantile metrics need quantile levels");
    std::map<std::pair<std::string, int>, std::vector<ArchiveRow>> cells;
    bool has_reference = false;
    for (const auto& r : rows) {
        if (!detail::metric_row(r, req.metric)) continue;
        cells[{r.spec, r.week}].push_back(r);
        has_reference = has_reference || r.spec == req.relative_to;
    }
    if (cells.empty()) {
        throw ScoringError(req.metric == Metric::RMSFE
                               ? "archive holds no EC point predictions"
                               : "archive holds no CO2 quantile predictions; quantile metrics require quantiles");
    }
    if (!has_reference && req.relative_to != "HistMean") {
        throw NotFoundError("reference spec '" + req.relative_to + "' is not in the archive");
    }
    std::vector<ScoreTableRow> out;
    for (const auto& [cell, cell_rows] : cells) {
        const auto& [spec, week] = cell;
        std::vector<ArchiveRow> reference;
        if (has_reference) {
            const auto it = cells.find({req.relative_to, week});
            if (it == cells.end()) {
                throw ScoringError("reference spec " + req.relative_to + " has no rows at week " + std::to_string(week));
            }
            reference = it->second;
        } else {
            reference = cell_rows;
            for (auto& r : reference) r.prediction = r.benchmark;
        }
        const auto model = detail::score_rows(cell_rows, req);
        const auto bench = detail::score_rows(reference, req);
        out.push_back({spec, week, phase_of(week), relative_and_distribution(model, bench)});
    }
    return out;
}

[[nodiscard]] inline std::string format_sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline constexpr const char* kScoreTableHeader = "phase,week,q10,q25,q50,q75,q90,aggregate";

/// Table rows of one spec at 6 significant digits; `comment` opens the file when nonempty.
inline void write_score_table_csv(std::ostream& out, const std::vector<ScoreTableRow>& rows, const std::string& spec,
                                  const std::string& comment = {}) {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << kScoreTableHeader << '\n';
    for (const auto& r : rows) {
        if (r.spec != spec) continue;
        out << to_string(r.phase) << ',' << r.week;
        for (double q : r.score.quantiles) out << ',' << format_sig6(q);
        out << ',' << format_sig6(r.score.aggregate) << '\n';
    }
}

}  // namespace nowcast

#pragma once

#include "nowcast/almon.hpp"
#include "nowcast/archive.hpp"
#include "nowcast/calendar.hpp"
#include "nowcast/detail/empirical_quantile.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/panel.hpp"
#include "nowcast/panel_ls.hpp"
#include "nowcast/panel_qr.hpp"
#include "nowcast/skew_t.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nowcast {

enum class ModelKind { HistMean, AR, AR_M, AR_Q, AR_W, AR_W_M, AR_W_M_Q, DirectAR_W_M_Q };

/// One row of the model menu. The weekly block uses `almon` when present.
struct ModelSpec {
    ModelKind kind = ModelKind::AR_W_M_Q;
    AlmonSpec almon{};

    [[nodiscard]] bool weekly() const noexcept {
        return kind == ModelKind::AR_W || kind == ModelKind::AR_W_M || kind == ModelKind::AR_W_M_Q ||
               kind == ModelKind::DirectAR_W_M_Q;
    }
    [[nodiscard]] bool monthly() const noexcept {
        return kind == ModelKind::AR_M || kind == ModelKind::AR_W_M || kind == ModelKind::AR_W_M_Q ||
               kind == ModelKind::DirectAR_W_M_Q;
    }
    [[nodiscard]] bool quarterly() const noexcept {
        return kind == ModelKind::AR_Q || kind == ModelKind::AR_W_M_Q || kind == ModelKind::DirectAR_W_M_Q;
    }
    [[nodiscard]] bool direct() const noexcept { return kind == ModelKind::DirectAR_W_M_Q; }
    [[nodiscard]] bool hist_mean() const noexcept { return kind == ModelKind::HistMean; }

    [[nodiscard]] std::string name() const {
        switch (kind) {
            case ModelKind::HistMean: return "HistMean";
            case ModelKind::AR: return "AR";
            case ModelKind::AR_M: return "AR-M";
            case ModelKind::AR_Q: return "AR-Q";
            case ModelKind::AR_W: return "AR-W";
            case ModelKind::AR_W_M: return "AR-W-M";
            case ModelKind::AR_W_M_Q: return "AR-W-M-Q";
            case ModelKind::DirectAR_W_M_Q: return "DirectAR-W-M-Q";
        }
        return "";
    }
};

[[nodiscard]] inline std::vector<ModelSpec> all_model_specs() {
    std::vector<ModelSpec> out;
    for (auto k : {ModelKind::HistMean, ModelKind::AR, ModelKind::AR_M, ModelKind::AR_Q, ModelKind::AR_W,
                   ModelKind::AR_W_M, ModelKind::AR_W_M_Q, ModelKind::DirectAR_W_M_Q}) {
        out.push_back({k, {}});
    }
    return out;
}

[[nodiscard]] inline ModelSpec parse_model_spec(std::string_view name) {
    for (const auto& s : all_model_specs()) {
        if (s.name() == name) return s;
    }
    throw ConfigError("unknown model spec '" + std::string(name) + "'");
}

/// Pipeline settings shared by every (year, week, spec) cell.
struct PipelineOptions {
    int estimation_start = 1990;
    std::vector<double> taus = {0.25, 0.5, 0.75};
    double lambda = 1.0;
    QuantileSolver solver = QuantileSolver::Auto;
    bool fit_density = true;
};

/// Receives every number that enters a design row, prediction row, factor or benchmark.
using AuditHook = std::function<void(std::string_view stage, const std::string& entity, std::span<const double>)>;

struct EnergyNowcast {
    std::string entity;
    int year = 0;
    int week = 1;
    double value = 0.0;
    double benchmark = 0.0;  ///< historical mean of c on available years
};

struct CO2DensityNowcast {
    std::string entity;
    int year = 0;
    int week = 1;
    std::vector<double> quantiles;  ///< ascending, one per tau
    std::optional<SkewTParams> density;
    std::vector<double> benchmark;  ///< per-entity empirical quantiles of e
};

/// Design for one (year, week, spec): training rows on realized history and one
/// prediction row per entity for the target year.
struct PanelDesign {
    std::vector<DesignRow> training;
    std::vector<DesignRow> prediction;
    std::vector<std::string> labels;
    std::vector<std::string> excluded;  ///< entities with no usable training row
};

namespace detail {

/// Lag offsets of the prediction date, in periods relative to the end of the target year.
/// Training year s uses the same offsets relative to the end of s.
struct LagPlan {
    int target_year = 0;
    int ec_lag = 0;     ///< d_v
    int co2_lag = 0;    ///< g_v
    int factor_lag = 0; ///< latest year where both cross-section means exist, as t - year
    long quarterly_offset = 0;
    long monthly_offset = 0;
    long weekly_offset = 0;
};

[[nodiscard]] inline LagPlan lag_plan(const InformationSet& info) {
    LagPlan plan;
    plan.target_year = info.year;
    plan.ec_lag = info.annual_lag(vars::kEC);
    plan.co2_lag = info.annual_lag(vars::kCO2);
    plan.factor_lag = std::max(plan.ec_lag, plan.co2_lag);
    plan.quarterly_offset = info.contains(vars::kPI) ? -info.period_lag(vars::kPI) : 0;
    plan.monthly_offset = info.contains(vars::kELEC) ? -info.period_lag(vars::kELEC) : 0;
    plan.weekly_offset = info.contains(vars::kWECI) ? -info.period_lag(vars::kWECI) : 0;
    return plan;
}

[[nodiscard]] inline std::optional<double> annual_value(const PanelDataset& data, const std::string& variable,
                                                        const std::string& entity, int year) {
    if (!data.has_variable(variable)) return std::nullopt;
    return data.value(variable, entity, PeriodIndex{year, 1});
}

/// Lags of a high-frequency block for year s, newest first, or nullopt when not covered.
[[nodiscard]] inline std::optional<std::vector<double>> block_lags(const PanelDataset& data, const std::string& variable,
                                                                   const std::string& entity, int year, long offset,
                                                                   std::size_t count) {
    if (!data.has_variable(variable)) return std::nullopt;
    const auto* series = data.find(variable, entity);
    if (series == nullptr) return std::nullopt;
    const Frequency f = series->frequency();
    const PeriodIndex anchor = advance(year_end(year, f), offset, f);
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        const auto v = series->value_at(advance(anchor, -static_cast<long>(j), f));
        if (!v) return std::nullopt;
        out[j] = *v;
    }
    return out;
}

/// Appends the Q, M and W blocks of `spec` for entity and year s; false when any lag is missing.
[[nodiscard]] inline bool append_mixed_blocks(std::vector<double>& x, const PanelDataset& data, const ModelSpec& spec,
                                              const AlmonMap* almon, const LagPlan& plan, const std::string& entity,
                                              int year) {
    if (spec.quarterly()) {
        const auto q = block_lags(data, vars::kPI, entity, year, plan.quarterly_offset, 4);
        if (!q) return false;
        x.insert(x.end(), q->begin(), q->end());
    }
    if (spec.monthly()) {
        const auto m = block_lags(data, vars::kELEC, entity, year, plan.monthly_offset, 12);
        if (!m) return false;
        x.insert(x.end(), m->begin(), m->end());
    }
    if (spec.weekly()) {
        const auto w = block_lags(data, vars::kWECI, entity, year, plan.weekly_offset,
                                  static_cast<std::size_t>(almon->spec.lags));
        if (!w) return false;
        const Eigen::VectorXd t = almon->transform(*w);
        x.insert(x.end(), t.data(), t.data() + t.size());
    }
    return true;
}

inline void mixed_block_labels(std::vector<std::string>& labels, const ModelSpec& spec, const AlmonMap* almon) {
    if (spec.quarterly()) {
        for (int j = 0; j < 4; ++j) labels.push_back("PI[" + std::to_string(j) + "]");
    }
    if (spec.monthly()) {
        for (int j = 0; j < 12; ++j) labels.push_back("ELEC[" + std::to_string(j) + "]");
    }
    if (spec.weekly()) {
        for (int j = 0; j < almon->spec.free_parameters(); ++j) labels.push_back("WECI.almon[" + std::to_string(j) + "]");
    }
}

/// Cross-section mean of an annual variable, or nullopt when no entity has it.
[[nodiscard]] inline std::optional<double> factor(const PanelDataset& data, const std::string& variable, int year) {
    if (!data.has_variable(variable)) return std::nullopt;
    try {
        return cross_section_mean(data, variable, PeriodIndex{year, 1}).mean;
    } catch (const CoverageError&) {
        return std::nullopt;
    }
}

/// Realized values of an annual variable for one entity over [from, to].
[[nodiscard]] inline std::vector<double> history(const PanelDataset& data, const std::string& variable,
                                                 const std::string& entity, int from, int to) {
    std::vector<double> out;
    for (int s = from; s <= to; ++s) {
        if (const auto v = annual_value(data, variable, entity, s)) out.push_back(*v);
    }
    return out;
}

inline void audit(const AuditHook& hook, std::string_view stage, const DesignRow& row) {
    if (!hook) return;
    hook(stage, row.entity, std::span<const double>(&row.y, 1));
    hook(stage, row.entity, row.x);
}

inline void finish_design(PanelDesign& design, const PanelDataset& data) {
    std::set<std::string> trained;
    for (const auto& r : design.training) trained.insert(r.entity);
    for (const auto& e : data.entities()) {
        if (!trained.contains(e)) design.excluded.push_back(e);
    }
    std::erase_if(design.prediction, [&](const DesignRow& r) { return !trained.contains(r.entity); });
    if (design.training.empty()) throw CoverageError("empty design: no entity has a complete training row");
}

}  // namespace detail

/// Energy MIDAS design: y = c_s on [AR lag c_{s-d_v}, PI, ELEC, WECI blocks] with
/// identical lag offsets for training years and the target year.
[[nodiscard]] inline PanelDesign assemble_energy_design(const PanelDataset& data, const InformationSet& info,
                                                        const ModelSpec& spec, const AlmonMap* almon,
                                                        int estimation_start) {
    if (spec.hist_mean() || spec.direct()) throw ConfigError(spec.name() + " has no energy regression");
    if (spec.weekly() && almon == nullptr) throw ConfigError(spec.name() + " needs an Almon map");
    const auto plan = detail::lag_plan(info);
    const int last_training = info.at(vars::kEC).year;
    PanelDesign design;
    design.labels.push_back("EC.lag" + std::to_string(plan.ec_lag));
    detail::mixed_block_labels(design.labels, spec, almon);

    auto regressors = [&](const std::string& entity, int year) -> std::optional<std::vector<double>> {
        const auto ar = detail::annual_value(data, vars::kEC, entity, year - plan.ec_lag);
        if (!ar) return std::nullopt;
        std::vector<double> x{*ar};
        if (!detail::append_mixed_blocks(x, data, spec, almon, plan, entity, year)) return std::nullopt;
        return x;
    };
    for (const auto& entity : data.entities()) {
        for (int s = estimation_start; s <= last_training; ++s) {
            const auto y = detail::annual_value(data, vars::kEC, entity, s);
            if (!y) continue;
            if (auto x = regressors(entity, s)) design.training.push_back({entity, s, *y, std::move(*x)});
        }
        if (auto x = regressors(entity, plan.target_year)) {
            design.prediction.push_back({entity, plan.target_year, 0.0, std::move(*x)});
        }
    }
    detail::finish_design(design, data);
    return design;
}

/// Point nowcasts of c for the target year of `info` from a truncated dataset.
[[nodiscard]] inline std::vector<EnergyNowcast> nowcast_energy(const PanelDataset& data, const InformationSet& info,
                                                               const ModelSpec& spec, const AlmonMap* almon,
                                                               const PipelineOptions& options,
                                                               const AuditHook& hook = {}) {
    const int last = info.at(vars::kEC).year;
    std::map<std::string, double> bench;
    for (const auto& entity : data.entities()) {
        const auto h = detail::history(data, vars::kEC, entity, options.estimation_start, last);
        if (h.empty()) continue;
        double sum = 0.0;
        for (double v : h) sum += v;
        bench[entity] = sum / static_cast<double>(h.size());
        if (hook) hook("energy.benchmark", entity, h);
    }

    std::vector<EnergyNowcast> out;
    if (spec.hist_mean()) {
        for (const auto& [entity, mean] : bench) out.push_back({entity, info.year, info.week, mean, mean});
        if (out.empty()) throw CoverageError("no entity has energy history");
        return out;
    }
    const auto design = assemble_energy_design(data, info, spec, almon, options.estimation_start);
    for (const auto& r : design.training) detail::audit(hook, "energy.training", r);
    WithinOptions within;
    within.labels = design.labels;
    within.collinear = CollinearPolicy::Drop;
    const auto model = fit_within(design.training, within);
    for (const auto& r : design.prediction) {
        if (hook) hook("energy.prediction", r.entity, r.x);
        out.push_back({r.entity, info.year, info.week, predict(model, r.entity, r.x), bench.at(r.entity)});
    }
    return out;
}

/// Bridge design: y = e_s on [e_{s-g_v}, c, mean e, mean c], with realized c_s in training
/// rows and the energy nowcast in prediction rows; the factors sit at the latest year where
/// both cross-section means exist.
[[nodiscard]] inline PanelDesign bridge_design(const PanelDataset& data, const InformationSet& info,
                                               const std::vector<EnergyNowcast>& energy, int estimation_start) {
    const auto plan = detail::lag_plan(info);
    const int last_training = info.at(vars::kCO2).year;
    PanelDesign design;
    design.labels = {"CO2.lag" + std::to_string(plan.co2_lag), "EC.nowcast", "CO2.mean.lag" + std::to_string(plan.factor_lag),
                     "EC.mean.lag" + std::to_string(plan.factor_lag)};
    std::map<int, std::optional<std::pair<double, double>>> factors;
    auto factors_at = [&](int year) -> std::optional<std::pair<double, double>> {
        auto it = factors.find(year);
        if (it != factors.end()) return it->second;
        const auto fe = detail::factor(data, vars::kCO2, year);
        const auto fc = detail::factor(data, vars::kEC, year);
        std::optional<std::pair<double, double>> f;
        if (fe && fc) f = std::pair{*fe, *fc};
        factors.emplace(year, f);
        return f;
    };
    auto regressors = [&](const std::string& entity, int year, double c) -> std::optional<std::vector<double>> {
        const auto ar = detail::annual_value(data, vars::kCO2, entity, year - plan.co2_lag);
        const auto f = factors_at(year - plan.factor_lag);
        if (!ar || !f) return std::nullopt;
        return std::vector<double>{*ar, c, f->first, f->second};
    };
    std::map<std::string, double> chat;
    for (const auto& n : energy) chat[n.entity] = n.value;
    for (const auto& entity : data.entities()) {
        for (int s = estimation_start; s <= last_training; ++s) {
            const auto y = detail::annual_value(data, vars::kCO2, entity, s);
            const auto c = detail::annual_value(data, vars::kEC, entity, s);
            if (!y || !c) continue;
            if (auto x = regressors(entity, s, *c)) design.training.push_back({entity, s, *y, std::move(*x)});
        }
        const auto it = chat.find(entity);
        if (it == chat.end()) continue;
        if (auto x = regressors(entity, plan.target_year, it->second)) {
            design.prediction.push_back({entity, plan.target_year, 0.0, std::move(*x)});
        }
    }
    detail::finish_design(design, data);
    return design;
}

/// Direct quantile-MIDAS design: y = e_s on [e_{s-g_v}, PI, ELEC, WECI blocks, mean e at g_v].
[[nodiscard]] inline PanelDesign direct_design(const PanelDataset& data, const InformationSet& info,
                                               const ModelSpec& spec, const AlmonMap* almon, int estimation_start) {
    if (almon == nullptr) throw ConfigError(spec.name() + " needs an Almon map");
    const auto plan = detail::lag_plan(info);
    const int last_training = info.at(vars::kCO2).year;
    PanelDesign design;
    design.labels.push_back("CO2.lag" + std::to_string(plan.co2_lag));
    detail::mixed_block_labels(design.labels, spec, almon);
    design.labels.push_back("CO2.mean.lag" + std::to_string(plan.co2_lag));

    std::map<int, std::optional<double>> factors;
    auto regressors = [&](const std::string& entity, int year) -> std::optional<std::vector<double>> {
        const auto ar = detail::annual_value(data, vars::kCO2, entity, year - plan.co2_lag);
        if (!ar) return std::nullopt;
        std::vector<double> x{*ar};
        if (!detail::append_mixed_blocks(x, data, spec, almon, plan, entity, year)) return std::nullopt;
        const int fy = year - plan.co2_lag;
        auto it = factors.find(fy);
        if (it == factors.end()) it = factors.emplace(fy, detail::factor(data, vars::kCO2, fy)).first;
        if (!it->second) return std::nullopt;
        x.push_back(*it->second);
        return x;
    };
    for (const auto& entity : data.entities()) {
        for (int s = estimation_start; s <= last_training; ++s) {
            const auto y = detail::annual_value(data, vars::kCO2, entity, s);
            if (!y) continue;
            if (auto x = regressors(entity, s)) design.training.push_back({entity, s, *y, std::move(*x)});
        }
        if (auto x = regressors(entity, plan.target_year)) {
            design.prediction.push_back({entity, plan.target_year, 0.0, std::move(*x)});
        }
    }
    detail::finish_design(design, data);
    return design;
}

/// Quantile nowcasts of e at every tau, rearranged, with a skew-t fitted to them and the
/// per-entity historical quantiles as benchmark. `energy` feeds the bridge and is ignored
/// by HistMean and the direct model.
[[nodiscard]] inline std::vector<CO2DensityNowcast> nowcast_co2_density(const PanelDataset& data,
                                                                        const InformationSet& info,
                                                                        const ModelSpec& spec, const AlmonMap* almon,
                                                                        const std::vector<EnergyNowcast>& energy,
                                                                        const PipelineOptions& options,
                                                                        const AuditHook& hook = {}) {
    const int last = info.at(vars::kCO2).year;
    std::map<std::string, std::vector<double>> bench;
    for (const auto& entity : data.entities()) {
        const auto h = detail::history(data, vars::kCO2, entity, options.estimation_start, last);
        if (h.empty()) continue;
        if (hook) hook("co2.benchmark", entity, h);
        std::vector<double> q;
        for (double tau : options.taus) q.push_back(detail::type7_quantile(h, tau));
        bench[entity] = std::move(q);
    }

    SkewTFitOptions fit_options;
    fit_options.levels = options.taus;
    auto package = [&](const std::string& entity, std::vector<double> q) {
        std::sort(q.begin(), q.end());
        CO2DensityNowcast n{entity, info.year, info.week, q, std::nullopt, bench.at(entity)};
        if (options.fit_density) {
            try {
                n.density = fit_from_quantiles(q, fit_options).params;
            } catch (const Error&) {
                n.density.reset();
            }
        }
        return n;
    };

    std::vector<CO2DensityNowcast> out;
    if (spec.hist_mean()) {
        for (const auto& [entity, q] : bench) out.push_back(package(entity, q));
        if (out.empty()) throw CoverageError("no entity has CO2 history");
        return out;
    }
    if (hook) {
        for (const auto& n : energy) hook("co2.energy_nowcast", n.entity, std::span<const double>(&n.value, 1));
    }
    const auto design = spec.direct() ? direct_design(data, info, spec, almon, options.estimation_start)
                                      : bridge_design(data, info, energy, options.estimation_start);
    for (const auto& r : design.training) detail::audit(hook, "co2.training", r);
    std::map<std::string, std::vector<double>> q;
    for (double tau : options.taus) {
        QuantileSpec qs;
        qs.tau = tau;
        qs.lambda = options.lambda;
        qs.solver = options.solver;
        qs.collinear = CollinearPolicy::Drop;
        qs.labels = design.labels;
        const auto model = fit_quantile(design.training, qs);
        for (const auto& r : design.prediction) q[r.entity].push_back(predict_quantile(model, r.entity, r.x));
    }
    for (const auto& r : design.prediction) {
        if (hook) hook("co2.prediction", r.entity, r.x);
        out.push_back(package(r.entity, q.at(r.entity)));
    }
    return out;
}

/// Experiment settings. Defaults: estimation from 1990, evaluation 2009-2018, taus
/// 0.25/0.5/0.75, lambda 1, every spec, all 48 weeks.
struct RunConfig {
    std::string data_dir;
    int estimation_start = 1990;
    int eval_start = 2009;
    int eval_end = 2018;
    std::vector<double> taus = {0.25, 0.5, 0.75};
    double lambda = 1.0;
    std::vector<ModelSpec> specs = all_model_specs();
    std::string weci_transform = "level";  ///< level | yoy_diff
    bool fit_density = true;
    QuantileSolver solver = QuantileSolver::Auto;
    std::vector<int> weeks = default_weeks();

    [[nodiscard]] static std::vector<int> default_weeks() {
        std::vector<int> w(kCalendarWeeks);
        for (int v = 1; v <= kCalendarWeeks; ++v) w[static_cast<std::size_t>(v - 1)] = v;
        return w;
    }

    [[nodiscard]] PipelineOptions pipeline() const {
        return {estimation_start, taus, lambda, solver, fit_density};
    }

    void validate() const {
        if (!(estimation_start < eval_start)) throw ConfigError("estimation_start must precede eval_start");
        if (eval_end < eval_start) throw ConfigError("eval_end must not precede eval_start");
        if (taus.empty()) throw ConfigError("taus must not be empty");
        for (std::size_t j = 0; j < taus.size(); ++j) {
            if (!(taus[j] > 0.0 && taus[j] < 1.0)) throw ConfigError("taus must lie in (0,1)");
            if (j > 0 && !(taus[j] > taus[j - 1])) throw ConfigError("taus must be strictly increasing");
        }
        if (fit_density && taus.size() < 3) throw ConfigError("fit_density needs at least three taus");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");
        if (specs.empty()) throw ConfigError("specs must not be empty");
        if (weci_transform != "level" && weci_transform != "yoy_diff") {
            throw ConfigError("weci_transform must be level or yoy_diff, got '" + weci_transform + "'");
        }
        if (weeks.empty()) throw ConfigError("weeks must not be empty");
        for (std::size_t j = 0; j < weeks.size(); ++j) {
            if (weeks[j] < 1 || weeks[j] > kCalendarWeeks) throw ConfigError("weeks must lie in 1..48");
            if (j > 0 && weeks[j] <= weeks[j - 1]) throw ConfigError("weeks must be strictly increasing");
        }
        for (const auto& s : specs) {
            if (s.weekly()) s.almon.validate();
        }
    }
};

namespace detail {

[[nodiscard]] inline double realized_or_nan(const PanelDataset& data, const std::string& variable,
                                            const std::string& entity, int year) {
    const auto v = annual_value(data, variable, entity, year);
    return v ? *v : std::nan("");
}

inline void record_missing_entities(NowcastArchive& out, const PanelDataset& data, const std::set<std::string>& done,
                                    const std::string& spec, const std::string& variable, int year, int week) {
    for (const auto& e : data.entities()) {
        if (!done.contains(e)) out.gaps.push_back({spec, variable, e, year, week, "excluded: insufficient history"});
    }
}

}  // namespace detail

/// Every spec at one prediction date. `data` is the full final vintage; it is truncated
/// to the information set before any model sees it, and only read directly for the
/// realized outcomes joined to the archive.
[[nodiscard]] inline NowcastArchive nowcast_week(const PanelDataset& data, const std::vector<ReleaseRule>& rules,
                                                 int year, int week, const RunConfig& config,
                                                 const std::map<std::string, AlmonMap>& almon_maps,
                                                 const AuditHook& hook = {}) {
    const auto info = information_set(rules, year, week);
    const auto visible = truncate(data, info);
    const auto options = config.pipeline();
    NowcastArchive out;
    for (const auto& spec : config.specs) {
        const std::string name = spec.name();
        const AlmonMap* almon = nullptr;
        if (spec.weekly()) almon = &almon_maps.at(name);

        std::vector<EnergyNowcast> energy;
        bool energy_ok = true;
        if (!spec.direct()) {
            try {
                energy = nowcast_energy(visible, info, spec, almon, options, hook);
                std::set<std::string> done;
                for (const auto& n : energy) {
                    done.insert(n.entity);
                    out.rows.push_back({name, vars::kEC, n.entity, year, week, archive_keys::kPoint, n.value, n.benchmark,
                                        detail::realized_or_nan(data, vars::kEC, n.entity, year)});
                }
                detail::record_missing_entities(out, visible, done, name, vars::kEC, year, week);
            } catch (const Error& e) {
                energy_ok = false;
                out.gaps.push_back({name, vars::kEC, "", year, week, e.what()});
            }
        }
        if (!energy_ok) {
            out.gaps.push_back({name, vars::kCO2, "", year, week, "no energy nowcast for the bridge"});
            continue;
        }
        try {
            const auto co2 = nowcast_co2_density(visible, info, spec, almon, energy, options, hook);
            std::set<std::string> done;
            for (const auto& n : co2) {
                done.insert(n.entity);
                const double realized = detail::realized_or_nan(data, vars::kCO2, n.entity, year);
                for (std::size_t j = 0; j < n.quantiles.size(); ++j) {
                    out.rows.push_back({name, vars::kCO2, n.entity, year, week, detail::format_double(options.taus[j]),
                                        n.quantiles[j], n.benchmark[j], realized});
                }
                if (n.density) {
                    const double nan = std::nan("");
                    const auto& p = *n.density;
                    for (const auto& [key, value] : {std::pair{archive_keys::kMu, p.mu}, std::pair{archive_keys::kSigma, p.sigma},
                                                     std::pair{archive_keys::kAlpha, p.alpha}, std::pair{archive_keys::kNu, p.nu}}) {
                        out.rows.push_back({name, vars::kCO2, n.entity, year, week, key, value, nan, realized});
                    }
                }
            }
            detail::record_missing_entities(out, visible, done, name, vars::kCO2, year, week);
        } catch (const Error& e) {
            out.gaps.push_back({name, vars::kCO2, "", year, week, e.what()});
        }
    }
    return out;
}

/// Applies the configured WECI transform to a copy of the dataset.
[[nodiscard]] inline PanelDataset prepare_dataset(const PanelDataset& data, const RunConfig& config) {
    PanelDataset out = data;
    if (config.weci_transform == "yoy_diff" && data.has_variable(vars::kWECI)) {
        for (const auto& [entity, series] : data.series_of(vars::kWECI)) out.put(vars::kWECI, yoy_difference(series));
    }
    return out;
}

/// Expanding-window pseudo-out-of-sample loop over evaluation years, weeks and specs.
/// Failures become gap records; the result depends only on the data and the config.
[[nodiscard]] inline NowcastArchive run_out_of_sample(const PanelDataset& raw, const std::vector<ReleaseRule>& rules,
                                                      const RunConfig& config, const AuditHook& hook = {}) {
    config.validate();
    const auto data = prepare_dataset(raw, config);
    for (const auto& variable : {vars::kEC, vars::kCO2}) {
        if (!data.has_variable(variable)) throw ConfigError("dataset has no '" + variable + "' variable");
    }
    for (int year : {config.eval_start, config.eval_end}) {
        bool seen = false;
        for (const auto& e : data.entities()) seen = seen || detail::annual_value(data, vars::kEC, e, year).has_value();
        if (!seen) throw ConfigError("evaluation year " + std::to_string(year) + " lies outside the data span");
    }
    std::map<std::string, AlmonMap> almon_maps;
    for (const auto& spec : config.specs) {
        if (spec.weekly()) almon_maps.emplace(spec.name(), build_almon_map(spec.almon));
    }
    NowcastArchive out;
    for (int year = config.eval_start; year <= config.eval_end; ++year) {
        for (int week : config.weeks) out.append(nowcast_week(data, rules, year, week, config, almon_maps, hook));
    }
    return out;
}

}  // namespace nowcast

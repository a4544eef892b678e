#pragma once

#include "nowcast/calendar.hpp"
#include "nowcast/panel.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nowcast::test_support {

/// Annual c driven by an Almon-shaped weighted sum of a weekly AR(1) factor plus monthly
/// and quarterly AR(1) signals; e = e_slope * c + noise. All series are in growth units.
struct SyntheticOptions {
    int entities = 8;
    int first_year = 1985;
    int last_year = 2018;
    std::uint64_t seed = 1;
    double weekly_rho = 0.97;
    double monthly_rho = 0.8;
    double quarterly_rho = 0.6;
    double weekly_loading = 1.0;
    double monthly_loading = 0.5;
    double quarterly_loading = 0.5;
    double c_noise = 0.1;
    double e_slope = 0.8;
    double e_noise = 0.05;
};

/// Weights (51 - c)^2 (c + 10), normalized to unit sum: zero value and slope at lag 51.
inline std::vector<double> synthetic_weekly_weights() {
    std::vector<double> b(52);
    double total = 0.0;
    for (int c = 0; c < 52; ++c) {
        b[static_cast<std::size_t>(c)] = (51.0 - c) * (51.0 - c) * (c + 10.0);
        total += b[static_cast<std::size_t>(c)];
    }
    for (double& w : b) w /= total;
    return b;
}

inline std::vector<double> ar1_path(std::mt19937_64& rng, std::size_t n, double rho) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> out(n);
    double x = z(rng) / std::sqrt(1.0 - rho * rho);
    for (auto& v : out) {
        x = rho * x + z(rng);
        v = x;
    }
    return out;
}

inline PanelDataset make_synthetic_panel(const SyntheticOptions& o) {
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const auto weights = synthetic_weekly_weights();
    const int pre = o.first_year - 2;
    const auto years = static_cast<std::size_t>(o.last_year - pre + 1);
    PanelDataset data;
    for (int i = 0; i < o.entities; ++i) {
        const std::string entity = "S" + std::to_string(10 + i);
        const auto weekly = ar1_path(rng, years * 52, o.weekly_rho);
        const auto monthly = ar1_path(rng, years * 12, o.monthly_rho);
        const auto quarterly = ar1_path(rng, years * 4, o.quarterly_rho);
        // Scale the weekly factor so its weighted annual sum has unit-order variance.
        std::vector<double> weekly_scaled(weekly.size());
        for (std::size_t k = 0; k < weekly.size(); ++k) weekly_scaled[k] = weekly[k] * std::sqrt(1.0 - o.weekly_rho * o.weekly_rho) * 3.0;
        const double effect = 0.3 * z(rng);
        std::vector<double> c;
        std::vector<double> e;
        for (int s = o.first_year; s <= o.last_year; ++s) {
            const auto y = static_cast<std::size_t>(s - pre);
            double w_sum = 0.0;
            for (std::size_t lag = 0; lag < 52; ++lag) w_sum += weights[lag] * weekly_scaled[y * 52 + 51 - lag];
            double m_sum = 0.0;
            for (std::size_t j = 0; j < 12; ++j) m_sum += monthly[y * 12 + 11 - j] / 12.0;
            double q_sum = 0.0;
            for (std::size_t j = 0; j < 4; ++j) q_sum += quarterly[y * 4 + 3 - j] / 4.0;
            const double cs = effect + o.weekly_loading * w_sum + o.monthly_loading * m_sum +
                              o.quarterly_loading * q_sum + o.c_noise * z(rng);
            c.push_back(cs);
            e.push_back(o.e_slope * cs + o.e_noise * z(rng));
        }
        data.add(vars::kEC, MixedFreqSeries(entity, Frequency::Annual, {o.first_year, 1}, c));
        data.add(vars::kCO2, MixedFreqSeries(entity, Frequency::Annual, {o.first_year, 1}, e));
        data.add(vars::kWECI, MixedFreqSeries(entity, Frequency::Weekly, {pre, 1}, weekly_scaled));
        data.add(vars::kELEC, MixedFreqSeries(entity, Frequency::Monthly, {pre, 1}, monthly));
        data.add(vars::kPI, MixedFreqSeries(entity, Frequency::Quarterly, {pre, 1}, quarterly));
    }
    return data;
}

/// Copy of `data` with every period after the information set replaced by `sentinel`.
inline PanelDataset poison_future(const PanelDataset& data, const InformationSet& info, double sentinel) {
    PanelDataset out;
    for (const auto& variable : data.variables()) {
        const PeriodIndex last = info.at(variable);
        for (const auto& [entity, series] : data.series_of(variable)) {
            std::vector<double> v(series.values().begin(), series.values().end());
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (series.period_at(k) > last) v[k] = sentinel;
            }
            out.add(variable, MixedFreqSeries(entity, series.frequency(), series.start(), v));
        }
    }
    return out;
}

}  // namespace nowcast::test_support

#include "nowcast/panel_qr.hpp"
#include "support/lp_fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nowcast;

namespace {

std::vector<DesignRow> single_entity(const std::vector<double>& y) {
    std::vector<DesignRow> rows;
    for (std::size_t t = 0; t < y.size(); ++t) rows.push_back({"A", static_cast<int>(t), y[t], {}});
    return rows;
}

std::vector<DesignRow> random_panel(std::mt19937_64& rng, int entities, int years, int k) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::student_t_distribution<double> noise(3.0);
    std::vector<double> beta(static_cast<std::size_t>(k));
    for (double& b : beta) b = z(rng);
    std::vector<DesignRow> rows;
    for (int i = 0; i < entities; ++i) {
        const double shift = 1.5 * z(rng);
        for (int t = 0; t < years; ++t) {
            DesignRow r{"S" + std::to_string(i), 2000 + t, shift + noise(rng), {}};
            for (int j = 0; j < k; ++j) {
                r.x.push_back(z(rng));
                r.y += r.x.back() * beta[static_cast<std::size_t>(j)];
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

double relative_gap(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST(FitQuantile, MedianOfFourTakesLowerEndpoint) {
    QuantileSpec spec{.tau = 0.5, .lambda = 0.0};
    const auto model = fit_quantile(single_entity({1, 2, 3, 9}), spec);
    EXPECT_NEAR(model.gamma.at("A"), 2.0, 1e-12);
    EXPECT_NEAR(model.objective, 0.5 * (1 + 0 + 1 + 7), 1e-12);
}

TEST(FitQuantile, LowerQuartileTakesLowerEndpoint) {
    QuantileSpec spec{.tau = 0.25, .lambda = 0.0};
    const auto model = fit_quantile(single_entity({0, 1, 2, 3}), spec);
    EXPECT_NEAR(model.gamma.at("A"), 0.0, 1e-12);
}

TEST(FitQuantile, RejectsTauOutsideUnitInterval) {
    EXPECT_THROW((void)fit_quantile(single_entity({1, 2}), QuantileSpec{.tau = 1.0}), DomainError);
    EXPECT_THROW((void)fit_quantile(single_entity({1, 2}), QuantileSpec{.tau = 0.0}), DomainError);
    EXPECT_THROW((void)fit_quantile(single_entity({1, 2}), QuantileSpec{.tau = 0.5, .lambda = -1.0}), DomainError);
}

TEST(FitQuantile, AliasedSlopeIsReportedOrDropped) {
    std::vector<DesignRow> rows = {{"A", 1, 1.0, {1.0, 0.0}}, {"A", 2, 2.0, {2.0, 0.0}}, {"B", 1, 0.5, {3.0, 0.0}},
                                   {"B", 2, 1.0, {4.0, 0.0}}};
    EXPECT_THROW((void)fit_quantile(rows, QuantileSpec{.lambda = 0.0}), SingularDesignError);
    const auto model = fit_quantile(rows, QuantileSpec{.lambda = 0.0, .collinear = CollinearPolicy::Drop});
    ASSERT_EQ(model.dropped.size(), 1u);
    EXPECT_EQ(model.dropped[0], 1u);
    EXPECT_EQ(model.beta(1), 0.0);
}

TEST(FitQuantile, SimplexMatchesExactLpOptimaOnFixtures) {
    const auto instances = test_support::load_lp_fixtures(NOWCAST_TEST_DATA "/qr_lp_fixtures.json");
    ASSERT_EQ(instances.size(), 25u);
    for (std::size_t n = 0; n < instances.size(); ++n) {
        for (const auto& opt : instances[n].optima) {
            QuantileSpec spec{.tau = opt.tau, .lambda = opt.lambda, .target = opt.target, .solver = QuantileSolver::Simplex};
            const auto model = fit_quantile(instances[n].rows, spec);
            EXPECT_LE(relative_gap(model.objective, opt.objective), 1e-6)
                << "instance " << n << " tau " << opt.tau << " lambda " << opt.lambda;
            EXPECT_NEAR(quantile_objective(model, instances[n].rows), model.objective, 1e-9);
        }
    }
}

TEST(FitQuantile, InteriorPointMatchesExactLpOptimaOnFixtures) {
    const auto instances = test_support::load_lp_fixtures(NOWCAST_TEST_DATA "/qr_lp_fixtures.json");
    for (std::size_t n = 0; n < instances.size(); ++n) {
        for (const auto& opt : instances[n].optima) {
            QuantileSpec spec{.tau = opt.tau, .lambda = opt.lambda, .target = opt.target,
                              .solver = QuantileSolver::InteriorPoint};
            QuantileModel model;
            ASSERT_NO_THROW(model = fit_quantile(instances[n].rows, spec))
                << "instance " << n << " tau " << opt.tau << " lambda " << opt.lambda;
            EXPECT_LE(relative_gap(model.objective, opt.objective), 1e-6)
                << "instance " << n << " tau " << opt.tau << " lambda " << opt.lambda;
        }
    }
}

TEST(FitQuantile, SingleEntityUnpenalizedIsPlainQuantileRegression) {
    // With one entity and lambda = 0 the fixed effect is an ordinary intercept.
    std::mt19937_64 rng(7);
    auto rows = random_panel(rng, 1, 40, 2);
    for (double tau : {0.25, 0.5, 0.75}) {
        const auto a = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 0.0, .solver = QuantileSolver::Simplex});
        const auto b = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 0.0, .solver = QuantileSolver::InteriorPoint});
        EXPECT_LE(relative_gap(a.objective, b.objective), 1e-9);
    }
}

TEST(FitQuantile, NoSingleCoordinatePerturbationImproves) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        auto rows = random_panel(rng, 4, 9, 3);
        for (double tau : {0.25, 0.5, 0.75}) {
            const auto model = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 1.0});
            const double base = quantile_objective(model, rows);
            for (Eigen::Index j = 0; j < model.beta.size(); ++j) {
                for (double h : {-1e-4, 1e-4}) {
                    auto moved = model;
                    moved.beta(j) += h;
                    EXPECT_GE(quantile_objective(moved, rows), base - 1e-8);
                }
            }
            for (const auto& [entity, g] : model.gamma) {
                for (double h : {-1e-4, 1e-4}) {
                    auto moved = model;
                    moved.gamma[entity] = g + h;
                    EXPECT_GE(quantile_objective(moved, rows), base - 1e-8);
                }
            }
            for (double h : {-1e-4, 1e-4}) {
                auto moved = model;
                moved.intercept += h;
                for (auto& [entity, g] : moved.gamma) g += h;
                EXPECT_GE(quantile_objective(moved, rows), base - 1e-8);
            }
        }
    }
}

TEST(FitQuantile, ScaleEquivariance) {
    std::mt19937_64 rng(13);
    auto rows = random_panel(rng, 3, 8, 2);
    for (double scale : {0.1, 3.0, 250.0}) {
        auto scaled = rows;
        for (auto& r : scaled) r.y *= scale;
        for (double tau : {0.25, 0.5, 0.75}) {
            // The penalty is positively homogeneous in the intercepts, so a fixed lambda keeps equivariance.
            const auto a = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 1.0});
            const auto b = fit_quantile(scaled, QuantileSpec{.tau = tau, .lambda = 1.0});
            EXPECT_NEAR(b.objective, scale * a.objective, 1e-9 * scale * std::max(1.0, a.objective));
            for (Eigen::Index j = 0; j < a.beta.size(); ++j) {
                EXPECT_NEAR(b.beta(j), scale * a.beta(j), 1e-9 * scale * std::max(1.0, std::abs(a.beta(j))));
            }
            for (const auto& [entity, g] : a.gamma) {
                EXPECT_NEAR(b.gamma.at(entity), scale * g, 1e-9 * scale * std::max(1.0, std::abs(g)));
            }
        }
    }
}

TEST(FitQuantile, HeavyShrinkageCollapsesEntityEffects) {
    std::mt19937_64 rng(17);
    auto rows = random_panel(rng, 6, 10, 1);
    for (double tau : {0.25, 0.5, 0.75}) {
        // Toward zero: sum |gamma_i| at lambda = 1e3 is at most 1% of the unpenalized value.
        const auto free_fit = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 0.0});
        const auto zero_fit =
            fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 1e3, .target = ShrinkageTarget::Zero});
        double free_sum = 0.0;
        double zero_sum = 0.0;
        for (const auto& [e, g] : free_fit.gamma) free_sum += std::abs(g);
        for (const auto& [e, g] : zero_fit.gamma) zero_sum += std::abs(g);
        EXPECT_LE(zero_sum, 0.01 * free_sum);

        // Toward a common value: dispersion around the mean collapses the same way.
        const auto common_fit = fit_quantile(rows, QuantileSpec{.tau = tau, .lambda = 1e3});
        auto dispersion = [](const QuantileModel& m) {
            double mean = 0.0;
            for (const auto& [e, g] : m.gamma) mean += g;
            mean /= static_cast<double>(m.gamma.size());
            double d = 0.0;
            for (const auto& [e, g] : m.gamma) d += std::abs(g - mean);
            return d;
        };
        EXPECT_LE(dispersion(common_fit), 0.01 * dispersion(free_fit));
    }
}

TEST(FitQuantile, CommonTargetDoesNotDependOnTheMeanOfY) {
    std::mt19937_64 rng(19);
    auto rows = random_panel(rng, 4, 8, 1);
    auto shifted = rows;
    for (auto& r : shifted) r.y += 100.0;
    const auto a = fit_quantile(rows, QuantileSpec{.tau = 0.5, .lambda = 1.0});
    const auto b = fit_quantile(shifted, QuantileSpec{.tau = 0.5, .lambda = 1.0});
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
    for (const auto& [e, g] : a.gamma) EXPECT_NEAR(b.gamma.at(e), g + 100.0, 1e-8);
}

TEST(PredictQuantile, InterceptAtZeroAndUnknownEntity) {
    std::mt19937_64 rng(23);
    auto rows = random_panel(rng, 3, 8, 2);
    const auto model = fit_quantile(rows, QuantileSpec{.tau = 0.5});
    const std::vector<double> zero(2, 0.0);
    EXPECT_EQ(predict_quantile(model, "S1", zero), model.gamma.at("S1"));
    EXPECT_THROW((void)predict_quantile(model, "nope", zero), UnknownEntityError);
    EXPECT_THROW((void)predict_quantile(model, "S1", std::vector<double>{1.0}), LengthError);
}

TEST(PredictQuantile, InterpolatedTrainingRowsAreReproduced) {
    std::mt19937_64 rng(29);
    auto rows = random_panel(rng, 3, 8, 2);
    const auto model = fit_quantile(rows, QuantileSpec{.tau = 0.5, .lambda = 0.0});
    int hits = 0;
    for (const auto& r : rows) {
        const double fit = predict_quantile(model, r.entity, r.x);
        if (std::abs(fit - r.y) < 1e-9) ++hits;
    }
    // A vertex solution interpolates at least as many rows as it has parameters.
    EXPECT_GE(hits, 3 + 2);
}

TEST(Rearrange, SortsAscendingAndKeepsSortedInput) {
    EXPECT_EQ(rearrange({1, 2, 3}), (std::array<double, 3>{1, 2, 3}));
    EXPECT_EQ(rearrange({3, 1, 2}), (std::array<double, 3>{1, 2, 3}));
    EXPECT_EQ(rearrange({2, 2, 2}), (std::array<double, 3>{2, 2, 2}));
}

TEST(Rearrange, HigherTauPredictionsDominateAfterSorting) {
    std::mt19937_64 rng(31);
    auto rows = random_panel(rng, 4, 12, 2);
    std::array<QuantileModel, 3> models = {fit_quantile(rows, QuantileSpec{.tau = 0.25}),
                                           fit_quantile(rows, QuantileSpec{.tau = 0.5}),
                                           fit_quantile(rows, QuantileSpec{.tau = 0.75})};
    for (const auto& r : rows) {
        const auto q = rearrange({predict_quantile(models[0], r.entity, r.x), predict_quantile(models[1], r.entity, r.x),
                                  predict_quantile(models[2], r.entity, r.x)});
        EXPECT_LE(q[0], q[1]);
        EXPECT_LE(q[1], q[2]);
    }
}

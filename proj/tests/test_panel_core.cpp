#include "nowcast/csv.hpp"
#include "nowcast/panel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace nowcast;

TEST(Frequency, PeriodsPerYear) {
    EXPECT_EQ(periods_per_year(Frequency::Annual), 1);
    EXPECT_EQ(periods_per_year(Frequency::Quarterly), 4);
    EXPECT_EQ(periods_per_year(Frequency::Monthly), 12);
    EXPECT_EQ(periods_per_year(Frequency::Weekly), 52);
}

TEST(PeriodIndex, OrderingAndArithmetic) {
    EXPECT_LT((PeriodIndex{2020, 52}), (PeriodIndex{2021, 1}));
    EXPECT_LT((PeriodIndex{2020, 3}), (PeriodIndex{2020, 4}));
    EXPECT_EQ(advance({2020, 49}, 4, Frequency::Weekly), (PeriodIndex{2021, 1}));
    EXPECT_EQ(advance({2021, 1}, -1, Frequency::Quarterly), (PeriodIndex{2020, 4}));
    EXPECT_EQ(advance({2021, 1}, -13, Frequency::Monthly), (PeriodIndex{2019, 12}));
    EXPECT_FALSE(valid_period({2020, 5}, Frequency::Quarterly));
    EXPECT_FALSE(valid_period({2020, 0}, Frequency::Weekly));
    EXPECT_EQ(format_period({2020, 3}, Frequency::Quarterly), "2020:Q3");
    EXPECT_EQ(format_period({2017, 1}, Frequency::Annual), "2017");
    for (long o = -200; o < 200; ++o) EXPECT_EQ(ordinal(from_ordinal(o, Frequency::Weekly), Frequency::Weekly), o);
}

TEST(MixedFreqSeries, RejectsInteriorMissingAndBadStart) {
    EXPECT_THROW(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {1.0, kMissing, 2.0}), CoverageError);
    EXPECT_NO_THROW(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {1.0, 2.0, kMissing}));
    EXPECT_THROW(MixedFreqSeries("A", Frequency::Quarterly, {2000, 5}, {1.0}), DomainError);
}

TEST(MixedFreqSeries, ContiguousIndexing) {
    MixedFreqSeries s("A", Frequency::Monthly, {2000, 11}, {1, 2, 3, 4});
    EXPECT_EQ(s.period_at(2), (PeriodIndex{2001, 1}));
    EXPECT_EQ(*s.value_at({2001, 2}), 4.0);
    EXPECT_FALSE(s.value_at({2001, 3}).has_value());
    EXPECT_FALSE(s.value_at({2000, 10}).has_value());
    EXPECT_EQ(s.truncated_at({2000, 12}).size(), 2u);
    EXPECT_EQ(s.truncated_at({1999, 1}).size(), 0u);
}

TEST(YoyLogGrowth, ConstantMonthlySeriesGivesZeros) {
    MixedFreqSeries s("A", Frequency::Monthly, {2000, 1}, std::vector<double>(24, 5.0));
    const auto g = yoy_log_growth(s);
    ASSERT_EQ(g.size(), 12u);
    EXPECT_EQ(g.start(), (PeriodIndex{2001, 1}));
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(YoyLogGrowth, AnnualPair) {
    MixedFreqSeries s("A", Frequency::Annual, {2000, 1}, {100, 110});
    const auto g = yoy_log_growth(s);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_NEAR(g.values()[0], 0.0953101798, 1e-9);
}

TEST(YoyLogGrowth, ExponentialWeeklyPath) {
    std::vector<double> v(104);
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = std::exp(0.01 * static_cast<double>(p));
    const auto g = yoy_log_growth(MixedFreqSeries("A", Frequency::Weekly, {2000, 1}, v));
    ASSERT_EQ(g.size(), 52u);
    for (double x : g.values()) EXPECT_NEAR(x, 0.52, 1e-12);
}

TEST(YoyLogGrowth, Errors) {
    EXPECT_THROW((void)yoy_log_growth(MixedFreqSeries("A", Frequency::Quarterly, {2000, 1}, {1, 2, 3, 4})),
                 LengthError);
    try {
        (void)yoy_log_growth(MixedFreqSeries("TX", Frequency::Annual, {2000, 1}, {1, 0, 3}));
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("TX"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("2001"), std::string::npos);
    }
}

TEST(YoyLogGrowth, InvertsExponentialCumulation) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 0.05);
    for (Frequency f : {Frequency::Annual, Frequency::Quarterly, Frequency::Monthly, Frequency::Weekly}) {
        const auto ppy = static_cast<std::size_t>(periods_per_year(f));
        std::vector<double> growth(5 * ppy);
        for (double& g : growth) g = z(rng);
        std::vector<double> levels(ppy, 1.0);
        for (std::size_t k = 0; k < ppy; ++k) levels[k] = 1.0 + 0.1 * static_cast<double>(k);
        for (double g : growth) levels.push_back(levels[levels.size() - ppy] * std::exp(g));
        const auto back = yoy_log_growth(MixedFreqSeries("A", f, {1990, 1}, levels));
        ASSERT_EQ(back.size(), growth.size());
        for (std::size_t k = 0; k < growth.size(); ++k) EXPECT_NEAR(back.values()[k], growth[k], 1e-12);
    }
}

TEST(PerCapita, Examples) {
    MixedFreqSeries pop("A", Frequency::Annual, {2000, 1}, {2, 4});
    const auto a = per_capita(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {10, 20}), pop);
    EXPECT_EQ(std::vector<double>(a.values().begin(), a.values().end()), (std::vector<double>{5, 5}));
    const auto b = per_capita(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {9}),
                              MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {3}));
    EXPECT_EQ(b.values()[0], 3.0);

    std::vector<double> monthly(24);
    for (std::size_t k = 0; k < 24; ++k) monthly[k] = static_cast<double>(k + 1);
    const auto m = per_capita(MixedFreqSeries("A", Frequency::Monthly, {2000, 1}, monthly), pop);
    for (std::size_t k = 0; k < 24; ++k) EXPECT_EQ(m.values()[k], monthly[k] / (k < 12 ? 2.0 : 4.0));
}

TEST(PerCapita, MissingPopulationYear) {
    MixedFreqSeries pop("A", Frequency::Annual, {2000, 1}, {2});
    EXPECT_THROW((void)per_capita(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {1, 2}), pop), CoverageError);
    EXPECT_THROW((void)per_capita(MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {1}),
                                  MixedFreqSeries("A", Frequency::Quarterly, {2000, 1}, {1})),
                 DomainError);
}

TEST(LagVector, Examples) {
    MixedFreqSeries s("A", Frequency::Quarterly, {2000, 1}, {1, 2, 3, 4});
    EXPECT_EQ(lag_vector(s, {2000, 4}, 4), (std::vector<double>{4, 3, 2, 1}));
    EXPECT_EQ(lag_vector(s, {2000, 3}, 1), (std::vector<double>{3}));
    EXPECT_THROW((void)lag_vector(s, {2000, 2}, 4), CoverageError);
    EXPECT_THROW((void)lag_vector(s, {2001, 1}, 1), CoverageError);
}

TEST(LagVector, LengthAndHead) {
    std::vector<double> v(200);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k) * 0.5;
    MixedFreqSeries s("A", Frequency::Weekly, {2000, 1}, v);
    for (std::size_t count = 1; count <= 60; ++count) {
        const auto lags = lag_vector(s, {2003, 10}, count);
        EXPECT_EQ(lags.size(), count);
        EXPECT_EQ(lags[0], *s.value_at({2003, 10}));
    }
}

TEST(CrossSectionMean, Examples) {
    auto make = [](std::vector<std::pair<std::string, double>> values) {
        PanelDataset d;
        for (auto& [e, v] : values) d.add("c", MixedFreqSeries(e, Frequency::Annual, {2000, 1}, {v}));
        return d;
    };
    EXPECT_EQ(cross_section_mean(make({{"A", 1}, {"B", 3}}), "c", {2000, 1}).mean, 2.0);
    EXPECT_EQ(cross_section_mean(make({{"A", 7}}), "c", {2000, 1}).mean, 7.0);
    const auto three = cross_section_mean(make({{"A", 1}, {"B", 2}, {"C", 6}}), "c", {2000, 1});
    EXPECT_EQ(three.mean, 3.0);
    EXPECT_EQ(three.contributors, 3u);
    EXPECT_THROW((void)cross_section_mean(make({{"A", 1}}), "c", {2001, 1}), CoverageError);
}

TEST(CrossSectionMean, OnlyAvailableEntitiesContribute) {
    PanelDataset d;
    d.add("c", MixedFreqSeries("A", Frequency::Annual, {2000, 1}, {1, 5}));
    d.add("c", MixedFreqSeries("B", Frequency::Annual, {2000, 1}, {3}));
    const auto m = cross_section_mean(d, "c", {2001, 1});
    EXPECT_EQ(m.mean, 5.0);
    EXPECT_EQ(m.contributors, 1u);
}

TEST(CrossSectionMean, InvariantToEntityOrdering) {
    std::vector<std::pair<std::string, double>> values = {{"A", 0.1}, {"B", -2.5}, {"C", 3.75}, {"D", 1e-3}, {"E", 7}};
    double reference = 0.0;
    for (int perm = 0; perm < 20; ++perm) {
        std::next_permutation(values.begin(), values.end());
        PanelDataset d;
        for (auto& [e, v] : values) d.add("c", MixedFreqSeries(e, Frequency::Annual, {2000, 1}, {v}));
        const double m = cross_section_mean(d, "c", {2000, 1}).mean;
        if (perm == 0) reference = m;
        EXPECT_EQ(m, reference);
    }
}

TEST(PanelDataset, FrequencyConsistency) {
    PanelDataset d;
    d.add("PI", MixedFreqSeries("A", Frequency::Quarterly, {2000, 1}, {1}));
    EXPECT_THROW(d.add("PI", MixedFreqSeries("B", Frequency::Monthly, {2000, 1}, {1})), DomainError);
    EXPECT_THROW(d.add("PI", MixedFreqSeries("A", Frequency::Quarterly, {2000, 1}, {1})), DomainError);
    EXPECT_THROW((void)d.frequency("nope"), UnknownVariableError);
}

TEST(ReadSeriesCsv, ParsesUnorderedRowsAndMergesWeek53) {
    std::istringstream in(
        "entity,year,sub,value\n"
        "# comment\n"
        "A,2000,52,2\n"
        "A,2000,51,1\n"
        "A,2000,53,4\n"
        "A,2001,1,5\n");
    const auto series = read_series_csv(in, Frequency::Weekly);
    ASSERT_EQ(series.size(), 1u);
    EXPECT_EQ(series[0].start(), (PeriodIndex{2000, 51}));
    EXPECT_EQ(*series[0].value_at({2000, 52}), 3.0);
    EXPECT_EQ(*series[0].value_at({2001, 1}), 5.0);
}

TEST(ReadSeriesCsv, RejectsDuplicateNamingTheLine) {
    std::istringstream in("entity,year,sub,value\nA,2000,1,1\nA,2000,2,1\nA,2000,1,3\n");
    try {
        (void)read_series_csv(in, Frequency::Quarterly, "pi.csv");
        FAIL();
    } catch (const ParseError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("pi.csv:4"), std::string::npos) << what;
        EXPECT_NE(what.find("line 2"), std::string::npos) << what;
    }
}

TEST(ReadSeriesCsv, RejectsGapsAndBadFields) {
    std::istringstream gap("entity,year,sub,value\nA,2000,1,1\nA,2000,3,1\n");
    EXPECT_THROW((void)read_series_csv(gap, Frequency::Quarterly), ParseError);
    std::istringstream bad("entity,year,sub,value\nA,2000,1,abc\n");
    EXPECT_THROW((void)read_series_csv(bad, Frequency::Quarterly), ParseError);
    std::istringstream header("state,year,value\n");
    EXPECT_THROW((void)read_series_csv(header, Frequency::Quarterly), ParseError);
    std::istringstream range("entity,year,sub,value\nA,2000,13,1\n");
    EXPECT_THROW((void)read_series_csv(range, Frequency::Monthly), ParseError);
}

TEST(ReadSeriesCsv, AnnualWithoutSubColumnAndRoundTrip) {
    std::istringstream in("entity,year,value\nB,2001,0.25\nA,2000,1.5\nA,2001,NA\n");
    const auto series = read_series_csv(in, Frequency::Annual);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_EQ(series[0].entity(), "A");
    EXPECT_EQ(series[0].observed_size(), 1u);

    std::map<std::string, MixedFreqSeries> by_entity;
    for (const auto& s : series) by_entity.emplace(s.entity(), s);
    std::ostringstream out;
    write_series_csv(out, by_entity);
    std::istringstream again(out.str());
    const auto reread = read_series_csv(again, Frequency::Annual);
    ASSERT_EQ(reread.size(), 2u);
    EXPECT_EQ(*reread[1].value_at({2001, 1}), 0.25);
}

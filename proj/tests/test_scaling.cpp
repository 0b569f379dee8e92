#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "specscale/specscale.hpp"

using namespace specscale;

namespace {

const std::filesystem::path kFixtures = SPECSCALE_FIXTURES;

double reference_topk(double b) { return 27904.0 * std::sqrt(1.0 + 0.034 / b) - 27897.0; }

DataSeries sample(const std::vector<double>& xs, const std::function<double(double)>& f) {
    std::vector<DataPoint> pts;
    for (double x : xs) pts.push_back({x, f(x)});
    return DataSeries::from_points(pts);
}

const std::vector<double> kBatches{1, 2, 4, 8, 16, 32, 64};

}  // namespace

TEST(Scaling, ReferenceEvaluations) {
    EXPECT_NEAR(reference_topk(1), 477.4, 0.05);
    EXPECT_NEAR(reference_topk(8), 66.2, 0.05);
    EXPECT_NEAR(reference_topk(64), 14.4, 0.05);
    EXPECT_NEAR(reference_topk(1e12), 7.0, 1e-3);
    ScalingFit t3{LawForm::Log2Linear, {286.79, 7.54}};
    EXPECT_NEAR(predict(t3, 64), 1728.28, 1e-9);
}

TEST(Scaling, RecoversLog10Constants) {
    const auto s = sample({1, 2, 5, 10, 20, 50, 100}, [](double x) { return 0.08 * std::log10(x) + 5.05; });
    const auto f = fit(s, LawForm::Log10Linear);
    EXPECT_NEAR(f.params[0], 0.08, 1e-9);
    EXPECT_NEAR(f.params[1], 5.05, 1e-9);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.n_points, 7u);
}

TEST(Scaling, RecoversDataScalingConstants) {
    const auto s = sample({1, 2, 5}, [](double x) { return 0.74 * std::log10(x) + 4.61; });
    const auto f = fit(s, LawForm::Log10Linear);
    EXPECT_NEAR(f.params[0], 0.74, 1e-9);
    EXPECT_NEAR(f.params[1], 4.61, 1e-9);
}

TEST(Scaling, RecoversLog2Constants) {
    const auto s = sample(kBatches, [](double x) { return 286.79 * std::log2(x) + 7.54; });
    const auto f = fit(s, LawForm::Log2Linear);
    EXPECT_NEAR(f.params[0], 286.79, 1e-9);
    EXPECT_NEAR(f.params[1], 7.54, 1e-9);
}

TEST(Scaling, TwoPointsInterpolateExactly) {
    const auto s = ingest_csv(kFixtures / "pretrain_endpoints.csv");
    ASSERT_EQ(s.size(), 2u);
    const auto f = fit(s, LawForm::Log10Linear);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_NEAR(predict(f, 1), 5.13, 1e-12);
    EXPECT_NEAR(predict(f, 100), 5.43, 1e-12);
    EXPECT_NEAR(f.params[0], 0.15, 1e-12);
}

TEST(Scaling, RecoversInvSqrtOnSeveralShapes) {
    struct Case {
        double c1, c2, c3;
    };
    for (const Case c : {Case{27904, 0.034, -27897}, Case{100, 3, 5}, Case{2, 50, -1}, Case{-40, 0.5, 100}}) {
        const auto s = sample(kBatches, [&](double x) { return c.c1 * std::sqrt(1 + c.c2 / x) + c.c3; });
        const auto f = fit(s, LawForm::InvSqrt);
        EXPECT_TRUE(f.converged);
        EXPECT_NEAR(f.params[0] / c.c1, 1.0, 1e-6) << c.c1;
        EXPECT_NEAR(f.params[1] / c.c2, 1.0, 1e-6) << c.c1;
        EXPECT_NEAR(f.params[2] / c.c3, 1.0, 1e-6) << c.c1;
        EXPECT_GE(f.r_squared, 0.999999);
    }
}

TEST(Scaling, NoisyInvSqrtPredictsBatch64) {
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = sample(kBatches, [&](double x) { return reference_topk(x) * (1.0 + noise(gen)); });
        const auto f = fit(s, LawForm::InvSqrt);
        EXPECT_NEAR(predict(f, 64), reference_topk(64), 1.0) << "trial " << trial;
    }
}

TEST(Scaling, MeasuredThroughputHasPositiveLog2Slope) {
    const auto f = fit(ingest_csv(kFixtures / "measured_throughput.csv"), LawForm::Log2Linear);
    EXPECT_GT(f.params[0], 0.0);
}

TEST(Scaling, FitReproducesTrainingPointsWhenExact) {
    const auto s = ingest_csv(kFixtures / "pretrain_law.csv");
    const auto f = fit(s, LawForm::Log10Linear);
    ASSERT_NEAR(f.r_squared, 1.0, 1e-12);
    for (const auto& p : s.points()) EXPECT_NEAR(predict(f, p.x), p.y, 1e-12);
}

TEST(Scaling, SeriesParsing) {
    const auto s = parse_series_csv("x,y\n10,3\n1,2\n5,7\n");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.points()[0].x, 1);
    EXPECT_EQ(s.points()[2].x, 10);
    EXPECT_THROW(parse_series_csv(""), ParseError);
    EXPECT_THROW(parse_series_csv("a,b\n1,2\n"), ParseError);
    EXPECT_THROW(parse_series_csv("x,y\n1,2,3\n"), ParseError);
    EXPECT_THROW(parse_series_csv("x,y\n1,2\n1,3\n"), ValidationError);
    EXPECT_THROW(parse_series_csv("x,y\n0,2\n1,3\n"), ValidationError);
    EXPECT_THROW(parse_series_csv("x,y\n1,2\n"), ValidationError);
    EXPECT_THROW(ingest_csv(kFixtures / "missing.csv"), ParseError);
}

TEST(Scaling, TooFewPointsForInvSqrt) {
    EXPECT_THROW(fit(sample({1, 2}, [](double x) { return x; }), LawForm::InvSqrt), DegenerateData);
}

TEST(Scaling, PredictDomain) {
    ScalingFit f{LawForm::InvSqrt, {1, -5, 0}};
    EXPECT_THROW(predict(f, 0), DomainError);
    EXPECT_THROW(predict(f, 2), DomainError);
    EXPECT_NO_THROW(predict(f, 10));
}

TEST(Scaling, FormNames) {
    for (LawForm f : {LawForm::Log10Linear, LawForm::Log2Linear, LawForm::InvSqrt}) {
        EXPECT_EQ(parse_law_form(law_form_name(f)), f);
    }
    EXPECT_THROW(parse_law_form("cubic"), ParseError);
}

TEST(Scaling, JsonReport) {
    const auto f = fit(ingest_csv(kFixtures / "optimal_topk_law.csv"), LawForm::InvSqrt);
    const auto j = fit_report_json(f);
    EXPECT_EQ(j["form"], "invsqrt");
    EXPECT_EQ(j["params"].size(), 3u);
    EXPECT_EQ(j["n_points"], 7);
    EXPECT_GE(j["r_squared"].get<double>(), 0.99);
    EXPECT_TRUE(j["converged"].get<bool>());
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "specscale/specscale.hpp"

using namespace specscale;

namespace {

const std::filesystem::path kFixtures = SPECSCALE_FIXTURES;

ModelSpec tiny() { return load_model_spec(kFixtures / "tiny.model"); }
HardwareSpec tiny_hw() { return load_hardware_spec(kFixtures / "tiny.hw"); }
ModelSpec large() { return load_model_spec(kFixtures / "qwen2.5-72b.model"); }
HardwareSpec h800() { return load_hardware_spec(kFixtures / "h800.hw"); }

DeployConfig deploy(Count b, Count s_pre, Count topk, Count k, double t_acc) {
    DeployConfig d;
    d.batch = b;
    d.prefill_len = s_pre;
    d.topk_paths = topk;
    d.draft_tokens = k;
    d.accepted_tokens = t_acc;
    return d;
}

}  // namespace

TEST(Roofline, CriticalIntensity) {
    EXPECT_EQ(critical_intensity({400, 100, 2}), 4.0);
    EXPECT_EQ(critical_intensity({7.5, 7.5, 2}), 1.0);
    EXPECT_NEAR(critical_intensity(h800()), 295.2, 0.05);
    EXPECT_EQ(critical_intensity(h800()), 9.89e14 / 3.35e12);
}

TEST(Roofline, TimingExamples) {
    const HardwareSpec hw{100, 10, 2};
    const auto t = roofline_timing(800, 100, hw);
    EXPECT_EQ(t.latency_s, 10.0);
    EXPECT_EQ(t.regime, Regime::MemoryBound);
    const HardwareSpec hw2{1e6, 1e6, 2};
    const auto u = roofline_timing(800, 200, hw2);
    EXPECT_EQ(u.intensity, 4.0);
    // At the critical intensity both terms coincide.
    const HardwareSpec hw3{400, 100, 2};
    const auto v = roofline_timing(4000, 1000, hw3);
    EXPECT_EQ(v.compute_s, v.memory_s);
    EXPECT_EQ(v.regime, Regime::ComputeBound);
}

TEST(Roofline, DtypeWidthHalvesIntensity) {
    const auto d = deploy(1, 0, 3, 2, 1);
    HardwareSpec hw = tiny_hw();
    const double i2 = intensity(tiny(), hw, d);
    hw.dtype_bytes = 4;
    EXPECT_DOUBLE_EQ(intensity(tiny(), hw, d), i2 / 2);
}

TEST(Roofline, IntensityIncreasesWithTopk) {
    for (Count k = 0; k < 64; ++k) {
        EXPECT_GT(intensity(tiny(), tiny_hw(), deploy(1, 0, k + 1, 2, 1)),
                  intensity(tiny(), tiny_hw(), deploy(1, 0, k, 2, 1)))
            << "top_k=" << k;
    }
}

TEST(Roofline, IntensityMatchesWorkload) {
    const auto d = deploy(1, 0, 1, 2, 1);
    const auto w = cycle_workload(tiny(), d);
    EXPECT_DOUBLE_EQ(intensity(tiny(), tiny_hw(), d), double(w.total_flops) / (2.0 * double(w.total_mem_elems)));
}

TEST(Roofline, AcceptanceModelValues) {
    const auto sat = AcceptanceModel::saturating(1.0);
    EXPECT_NEAR(sat(30), 4.75, 1e-12);
    EXPECT_EQ(sat(0), 0.0);
    EXPECT_NEAR(sat(3000), 6.0, 1e-9);
    EXPECT_EQ(AcceptanceModel::constant(2.5)(100), 2.5);
    EXPECT_THROW(AcceptanceModel::saturating(1.3), ValidationError);
    EXPECT_THROW(AcceptanceModel::constant(0), ValidationError);
    EXPECT_EQ(AcceptanceModel::parse("eq8:1.1").value(), 1.1);
    EXPECT_EQ(AcceptanceModel::parse("const:3").form(), AcceptanceModel::Form::Constant);
    EXPECT_THROW(AcceptanceModel::parse("eq9:1"), ParseError);
    EXPECT_THROW(AcceptanceModel::parse("eq8"), ParseError);
    EXPECT_EQ(AcceptanceModel::parse("eq8:0.9").to_string(), "eq8:0.9");
}

TEST(Roofline, CrossingBracketsThroughputPeakOnTinySpec) {
    // Crossing: first integer top_k whose intensity reaches I_crit.
    const auto acc = AcceptanceModel::saturating(1.0);
    const auto base = deploy(1, 0, 1, 2, 1);
    const auto curve = throughput_curve(tiny(), tiny_hw(), base, acc, {1, 257, 1});
    const auto best = curve[argmax_throughput(curve)].topk;
    const auto plan = plan_topk(tiny(), tiny_hw(), base, acc);
    EXPECT_LE(std::abs(double(best) - plan.optimal_topk_real), 2.0);
}

TEST(Roofline, ConstantAcceptanceThroughputFallsInComputeRegime) {
    const auto acc = AcceptanceModel::constant(2.0);
    const auto curve = throughput_curve(tiny(), tiny_hw(), deploy(1, 0, 1, 2, 2), acc, {1, 200, 1});
    bool seen = false;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i - 1].regime == Regime::ComputeBound) {
            seen = true;
            EXPECT_LE(curve[i].throughput_tps, curve[i - 1].throughput_tps);
        }
    }
    EXPECT_TRUE(seen);
}

TEST(Roofline, SinglePointRangeEqualsRooflinePoint) {
    const auto acc = AcceptanceModel::saturating(1.0);
    const auto d = deploy(4, 100, 7, 2, 1);
    const auto curve = throughput_curve(tiny(), tiny_hw(), d, acc, {7, 8, 1});
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_EQ(curve[0], roofline_point(tiny(), tiny_hw(), d, acc));
}

TEST(Roofline, PlannerHitsConstructedRoot) {
    // Choose P_peak so that the relaxed intensity at top_k = 8 is exactly critical.
    const auto acc = AcceptanceModel::constant(2.0);
    const auto base = deploy(2, 3, 1, 2, 2);
    HardwareSpec hw{1.0, 100.0, 2};
    hw.peak_flops = relaxed_intensity(tiny(), hw, base, acc, 8.0) * hw.mem_bandwidth;
    const auto r = plan_topk(tiny(), hw, base, acc);
    EXPECT_EQ(r.status, PlanStatus::Ok);
    EXPECT_NEAR(r.optimal_topk_real, 8.0, 1e-6);
    EXPECT_EQ(r.optimal_topk_int, 8);
}

TEST(Roofline, PlannerRootSatisfiesCriterion) {
    const auto acc = AcceptanceModel::saturating(1.0);
    for (Count b : {1, 2, 4, 8, 16, 32, 64}) {
        const auto r = plan_topk(large(), h800(), deploy(b, 10000, 1, 10, 1), acc);
        ASSERT_EQ(r.status, PlanStatus::Ok);
        EXPECT_NEAR(r.achieved_intensity / critical_intensity(h800()), 1.0, 1e-8);
        const auto at = [&](double k) { return relaxed_intensity(large(), h800(), deploy(b, 10000, 1, 10, 1), acc, k); };
        EXPECT_LE(at(double(r.optimal_topk_int)), critical_intensity(h800()) * (1 + 1e-12));
        EXPECT_GT(at(double(r.optimal_topk_int + 1)), critical_intensity(h800()));
    }
}

TEST(Roofline, PlannerDecreasesWithBatchOnTinySpec) {
    const auto acc = AcceptanceModel::constant(2.0);
    HardwareSpec hw{150, 100, 2};
    double prev = 1e300;
    for (Count b : {1, 2, 4, 8, 16, 32, 64}) {
        const auto r = plan_topk(tiny(), hw, deploy(b, 0, 1, 2, 2), acc);
        if (r.status == PlanStatus::AlreadyComputeBound) break;
        EXPECT_LT(r.optimal_topk_real, prev);
        prev = r.optimal_topk_real;
    }
}

TEST(Roofline, PlannerFlagsDegenerateCases) {
    const auto acc = AcceptanceModel::constant(1.0);
    const auto base = deploy(1, 0, 1, 2, 1);
    const auto low = plan_topk(tiny(), HardwareSpec{1e-3, 1.0, 2}, base, acc);
    EXPECT_EQ(low.status, PlanStatus::AlreadyComputeBound);
    EXPECT_EQ(low.optimal_topk_int, 1);
    const auto high = plan_topk(tiny(), HardwareSpec{1e12, 1.0, 2}, base, acc);
    EXPECT_EQ(high.status, PlanStatus::NoRoot);
    EXPECT_EQ(high.optimal_topk_int, kMaxPlannedTopk);
}

TEST(Roofline, LargeModelArgmaxAtBatch64) {
    const auto curve = throughput_curve(large(), h800(), deploy(64, 10000, 1, 10, 1),
                                        AcceptanceModel::saturating(1.0), {1, 129, 1});
    EXPECT_LE(curve[argmax_throughput(curve)].topk, 16);
}

TEST(Roofline, ProximityDoesNotHoldAtSmallBatch) {
    // The saturating acceptance curve saturates long before I_crit is reached at
    // small batch, so the throughput peak sits far below the crossing there.
    const auto acc = AcceptanceModel::saturating(1.0);
    const auto base = deploy(1, 10000, 1, 10, 1);
    const auto curve = throughput_curve(large(), h800(), base, acc, {1, 513, 1});
    const auto best = curve[argmax_throughput(curve)].topk;
    const auto plan = plan_topk(large(), h800(), base, acc);
    EXPECT_GT(std::abs(double(best) - plan.optimal_topk_real), 2.0);
}

TEST(Roofline, RangeParsing) {
    const auto r = TopkRange::parse("2:9:3");
    EXPECT_EQ(r.values(), (std::vector<Count>{2, 5, 8}));
    EXPECT_EQ(TopkRange::parse("4:5:1").values(), std::vector<Count>{4});
    EXPECT_THROW(TopkRange::parse("1:2"), ParseError);
    EXPECT_THROW(TopkRange::parse("a:2:1"), ParseError);
    EXPECT_THROW(TopkRange::parse("5:5:1"), ValidationError);
    EXPECT_THROW(TopkRange::parse("1:5:0"), ValidationError);
}

TEST(Roofline, CurveCsvRoundTrip) {
    auto curve = throughput_curve(large(), h800(), deploy(16, 10000, 1, 10, 1), AcceptanceModel::saturating(1.1),
                                  {1, 40, 3});
    auto back = curve_from_csv(curve_to_csv(curve));
    ASSERT_EQ(back.size(), curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        curve[i].accepted_tokens = 0;
        back[i].accepted_tokens = 0;
        EXPECT_EQ(back[i], curve[i]);
    }
}

TEST(Roofline, InterplayOrderingAndShape) {
    const auto rows = interplay_sweep(large(), h800(), deploy(1, 10000, 1, 10, 1), {16, 32, 64},
                                      {0.9, 1.0, 1.1, 1.2}, {1, 65, 1});
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows[0].batch, 16);
    EXPECT_EQ(rows[3].kappa, 1.2);
    EXPECT_EQ(rows[11].batch, 64);
}

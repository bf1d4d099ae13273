#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "attribkit/attribution.hpp"
#include "attribkit/model.hpp"
#include "test_util.hpp"

using namespace attribkit;

namespace {

double sum(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

std::vector<Record> small_background(int n_channels, int length, int count,
                                     std::uint64_t seed) {
    return testutil::random_records(count, n_channels, length, seed);
}

}  // namespace

TEST(IgTest, LinearModelIsExactWithOneStep) {
    const Model m = make_dense_model(2, 1, 1, {2.0, -1.0}, {0.3});
    const Record r = make_record("r", -1, 2, 1, {3.0, 4.0});
    const auto av = integrated_gradients(m, r, zero_baseline(m), 1, 0);
    ASSERT_EQ(av.per_feature.size(), 2u);
    EXPECT_DOUBLE_EQ(av.per_feature[0], 6.0);
    EXPECT_DOUBLE_EQ(av.per_feature[1], -4.0);
    EXPECT_DOUBLE_EQ(sum(av.per_feature), forward(m, r, 0) - 0.3);
    EXPECT_EQ(av.method, Method::ig);
    EXPECT_EQ(av.baseline_descriptor, "zero");
    EXPECT_EQ(av.steps, 1);
}

TEST(IgTest, ProductFunctionMatchesClosedForm) {
    testutil::ProductFunction f;
    const Tensor x({2, 1}, {2.0, 3.0});
    const Tensor zero({2, 1});
    // Straight path from 0: IG_i = x_0 * x_1 / 2 for both coordinates, and the
    // midpoint rule integrates the linear integrand exactly.
    const auto at_zero = integrated_gradients(f, x, zero, 4);
    EXPECT_NEAR(at_zero.per_feature[0], 3.0, 1e-12);
    EXPECT_NEAR(at_zero.per_feature[1], 3.0, 1e-12);

    const Tensor ones({2, 1}, {1.0, 1.0});
    const auto at_ones = integrated_gradients(f, x, ones, 4);
    EXPECT_NEAR(at_ones.per_feature[0], 2.0, 1e-12);
    EXPECT_NEAR(at_ones.per_feature[1], 3.0, 1e-12);
    EXPECT_EQ(at_ones.baseline_descriptor, "custom");
}

TEST(IgTest, RecordEqualToBaselineGivesExactZeros) {
    const Model m = make_temporal_model(3, 16, 2, 4);
    const Record r = testutil::random_record(3, 16, 9);
    const auto av = integrated_gradients(m, r, r.values, 64, 1);
    for (double v : av.per_feature) EXPECT_EQ(v, 0.0);
}

TEST(IgTest, MatchesIndependentTrapezoidIntegrator) {
    const Model m = make_temporal_model(3, 16, 2, 12);
    const Record r = testutil::random_record(3, 16, 13);
    ModelLogit f(m, 0);
    const auto mid = integrated_gradients(f, r.values, Tensor({3, 16}), 512,
                                          Granularity::timepoint);
    const Tensor trap = testutil::trapezoid_ig(f, r.values, Tensor({3, 16}), 2048);
    for (std::size_t i = 0; i < trap.size(); ++i) {
        EXPECT_NEAR(mid.per_feature[i], trap[i], 1e-6) << "flat " << i;
    }
}

TEST(IgTest, ChannelGranularityEqualsAggregatedTimepoints) {
    const Model m = make_temporal_model(3, 16, 2, 12);
    const Record r = testutil::random_record(3, 16, 14);
    const auto fine = integrated_gradients(m, r, zero_baseline(m), 128, 0,
                                           Granularity::timepoint);
    const auto coarse = integrated_gradients(m, r, zero_baseline(m), 128, 0,
                                             Granularity::channel);
    const auto rolled = aggregate_to_channels(fine, 3, 16);
    ASSERT_EQ(rolled.per_feature.size(), coarse.per_feature.size());
    for (std::size_t i = 0; i < coarse.per_feature.size(); ++i) {
        EXPECT_DOUBLE_EQ(rolled.per_feature[i], coarse.per_feature[i]);
    }
    EXPECT_EQ(rolled.granularity, Granularity::channel);
}

TEST(IgTest, AggregateHandChecked) {
    AttributionVector fine;
    fine.per_feature = {1.0, 2.0, 3.0, 4.0};
    fine.granularity = Granularity::timepoint;
    const auto rolled = aggregate_to_channels(fine, 2, 2);
    ASSERT_EQ(rolled.per_feature.size(), 2u);
    EXPECT_DOUBLE_EQ(rolled.per_feature[0], 3.0);
    EXPECT_DOUBLE_EQ(rolled.per_feature[1], 7.0);
    EXPECT_THROW(aggregate_to_channels(rolled, 2, 2), std::invalid_argument);
}

TEST(PathIgTest, EmptyWaypointsEqualsPlainIgBitwise) {
    const Model m = make_temporal_model(3, 16, 2, 6);
    const Record r = testutil::random_record(3, 16, 15);
    PathSpec path;
    path.baseline = zero_baseline(m);
    path.steps = 128;
    const auto via_path = path_integrated_gradients(m, r, path, 0);
    const auto direct = integrated_gradients(m, r, zero_baseline(m), 128, 0);
    ASSERT_EQ(via_path.per_feature.size(), direct.per_feature.size());
    for (std::size_t i = 0; i < direct.per_feature.size(); ++i) {
        EXPECT_EQ(via_path.per_feature[i], direct.per_feature[i]);
    }
}

TEST(PathIgTest, LinearFunctionIsPathIndependent) {
    const Model m = make_dense_model(2, 1, 1, {2.0, -1.0}, {0.0});
    const Record r = make_record("r", -1, 2, 1, {3.0, 4.0});
    PathSpec path;
    path.baseline = Tensor({2, 1}, {1.0, -2.0});
    path.waypoints = {Tensor({2, 1}, {10.0, 0.5}), Tensor({2, 1}, {-3.0, 7.0})};
    path.steps = 1;
    const auto detour = path_integrated_gradients(m, r, path, 0);
    // For a linear function the segment contributions telescope per feature.
    EXPECT_NEAR(detour.per_feature[0], 2.0 * (3.0 - 1.0), 1e-12);
    EXPECT_NEAR(detour.per_feature[1], -1.0 * (4.0 - (-2.0)), 1e-12);
    EXPECT_EQ(detour.baseline_descriptor, "custom+2-waypoints");
}

TEST(PathIgTest, CompletenessHoldsAlongNonlinearDetours) {
    const Model m = make_temporal_model(3, 16, 2, 8);
    const Record r = testutil::random_record(3, 16, 16);
    PathSpec path;
    path.baseline = zero_baseline(m);
    path.waypoints = {testutil::random_record(3, 16, 17).values};
    path.steps = 4096;
    const auto av = path_integrated_gradients(m, r, path, 1, Granularity::channel);
    const Record base = make_record("b", -1, 3, 16, std::vector<double>(48, 0.0));
    EXPECT_NEAR(sum(av.per_feature), forward(m, r, 1) - forward(m, base, 1), 1e-6);
}

TEST(SsTest, SingleBackgroundLinearModelIsExactWithZeroError) {
    const Model m = make_dense_model(3, 1, 1, {2.0, -1.0, 0.5}, {0.1});
    const Record r = make_record("r", -1, 3, 1, {3.0, 4.0, -2.0});
    SSConfig cfg;
    cfg.samples_per_feature = 10;
    cfg.background = {make_record("bg", -1, 3, 1, {1.0, 1.0, 1.0})};
    cfg.seed = 7;
    const auto av = shapley_sampling(m, r, cfg, 0);
    EXPECT_DOUBLE_EQ(av.per_feature[0], 2.0 * (3.0 - 1.0));
    EXPECT_DOUBLE_EQ(av.per_feature[1], -1.0 * (4.0 - 1.0));
    EXPECT_DOUBLE_EQ(av.per_feature[2], 0.5 * (-2.0 - 1.0));
    // The walk's running sum depends on the permutation, so the "identical"
    // marginals can differ in the last ulp; the error must still be ~0.
    for (double se : av.standard_error) EXPECT_LE(se, 1e-15);
    EXPECT_EQ(av.baseline_descriptor, "background[1]");
    EXPECT_EQ(av.samples, 10);
}

TEST(SsTest, ProductFunctionConvergesToClosedFormWithHonestError) {
    testutil::ProductFunction f;
    const Tensor x({2, 1}, {2.0, 3.0});
    SSConfig cfg;
    cfg.samples_per_feature = 4000;
    cfg.background = {make_record("bg", -1, 2, 1, {0.0, 0.0})};
    cfg.seed = 3;
    const auto av = shapley_sampling(f, x, cfg);
    // Each permutation contributes (0, 6) or (6, 0); the mean tends to (3, 3)
    // and the per-sample deviation is exactly 3.
    EXPECT_NEAR(av.per_feature[0], 3.0, 4.0 * av.standard_error[0]);
    EXPECT_NEAR(av.per_feature[1], 3.0, 4.0 * av.standard_error[1]);
    EXPECT_NEAR(av.standard_error[0], 3.0 / std::sqrt(4000.0), 0.005);
    EXPECT_NEAR(sum(av.per_feature), 6.0, 1e-9);
}

TEST(SsTest, CompletenessIsExactPerSampleWalk) {
    // Every permutation walk telescopes to f(x) - f(b_s), so the attribution
    // total equals the mean over drawn backgrounds exactly.
    const Model m = make_temporal_model(4, 16, 2, 31);
    const Record r = testutil::random_record(4, 16, 32);
    SSConfig cfg;
    cfg.samples_per_feature = 50;
    cfg.background = small_background(4, 16, 6, 33);
    cfg.seed = 11;
    const auto av = shapley_sampling(m, r, cfg, 1);
    ModelLogit f(m, 1);
    double expected = 0.0;
    for (std::size_t s = 0; s < 50; ++s) {
        Rng rng(Rng::mix(cfg.seed, s));
        rng.permutation(4);
        const std::size_t bg = rng.below(cfg.background.size());
        expected += f.value(r.values) - f.value(cfg.background[bg].values);
    }
    EXPECT_NEAR(sum(av.per_feature), expected / 50.0, 1e-10);
}

TEST(ExactShapleyTest, MatchesPermutationOracle) {
    for (int n : {4, 6}) {
        const Model m = make_temporal_model(n, 16, 2, 50 + n);
        const Record r = testutil::random_record(n, 16, 60 + n);
        const auto background = small_background(n, 16, 3, 70 + n);
        const auto av = exact_shapley(m, r, background, 0);
        ModelLogit f(m, 0);
        const auto v = testutil::blended_value(f, r.values, background);
        const auto oracle = testutil::permutation_shapley(n, v);
        for (int i = 0; i < n; ++i) {
            EXPECT_NEAR(av.per_feature[i], oracle[i], 1e-9) << "n=" << n << " i=" << i;
        }
        const double full = v((1u << n) - 1u), none = v(0);
        EXPECT_NEAR(sum(av.per_feature), full - none, 1e-9);
    }
}

TEST(ExactShapleyTest, ProductFunctionClosedForm) {
    testutil::ProductFunction f;
    const Tensor x({2, 1}, {2.0, 3.0});
    const std::vector<Record> background = {make_record("bg", -1, 2, 1, {0.0, 0.0})};
    const auto av = exact_shapley(f, x, background);
    EXPECT_NEAR(av.per_feature[0], 3.0, 1e-12);
    EXPECT_NEAR(av.per_feature[1], 3.0, 1e-12);
}

TEST(ThreadStabilityTest, AttributionsAreBitIdenticalAcrossThreadCounts) {
    const Model m = make_temporal_model(6, 64, 2, 77);
    const Record r = testutil::random_record(6, 64, 78);
    const auto background = small_background(6, 64, 5, 79);

    const auto ig1 = integrated_gradients(m, r, zero_baseline(m), 512, 0,
                                          Granularity::channel, 1);
    SSConfig ss_cfg;
    ss_cfg.samples_per_feature = 200;
    ss_cfg.background = background;
    ss_cfg.seed = 5;
    ss_cfg.threads = 1;
    const auto ss1 = shapley_sampling(m, r, ss_cfg, 0);
    const auto ex1 = exact_shapley(m, r, background, 0, 1);

    for (int threads : {3, 7}) {
        const auto ig = integrated_gradients(m, r, zero_baseline(m), 512, 0,
                                             Granularity::channel, threads);
        SSConfig cfg = ss_cfg;
        cfg.threads = threads;
        const auto ss = shapley_sampling(m, r, cfg, 0);
        const auto ex = exact_shapley(m, r, background, 0, threads);
        EXPECT_EQ(ig.per_feature, ig1.per_feature) << threads << " threads";
        EXPECT_EQ(ss.per_feature, ss1.per_feature) << threads << " threads";
        EXPECT_EQ(ss.standard_error, ss1.standard_error) << threads << " threads";
        EXPECT_EQ(ex.per_feature, ex1.per_feature) << threads << " threads";
    }
}

TEST(AttributionErrorTest, RejectsBadArguments) {
    const Model m = make_temporal_model(3, 16, 2, 1);
    const Record r = testutil::random_record(3, 16, 2);
    EXPECT_THROW(integrated_gradients(m, r, zero_baseline(m), 0, 0), std::invalid_argument);
    EXPECT_THROW(integrated_gradients(m, r, Tensor({3, 8}), 16, 0), std::invalid_argument);

    SSConfig cfg;
    cfg.background = small_background(3, 16, 2, 3);
    cfg.granularity = Granularity::timepoint;
    EXPECT_THROW(shapley_sampling(m, r, cfg, 0), std::invalid_argument);
    cfg.granularity = Granularity::channel;
    cfg.background.clear();
    EXPECT_THROW(shapley_sampling(m, r, cfg, 0), std::invalid_argument);
    cfg.background = small_background(3, 16, 2, 3);
    cfg.samples_per_feature = 0;
    EXPECT_THROW(shapley_sampling(m, r, cfg, 0), std::invalid_argument);

    EXPECT_THROW(exact_shapley(m, r, {}, 0), std::invalid_argument);
    const Model wide = make_temporal_model(21, 16, 2, 4);
    const Record wr = testutil::random_record(21, 16, 5);
    try {
        exact_shapley(wide, wr, testutil::random_records(1, 21, 16, 6), 0);
        FAIL() << "expected throw";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("shapley_sampling"), std::string::npos);
    }
}

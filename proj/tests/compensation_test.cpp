#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "attribkit/compensation.hpp"
#include "attribkit/io.hpp"
#include "test_util.hpp"

using namespace attribkit;

namespace {

Model linear3() {
    return make_dense_model(3, 1, 1, {2.0, -1.0, 0.5}, {0.1});
}

SSConfig linear_ss() {
    SSConfig cfg;
    cfg.samples_per_feature = 8;
    cfg.background = {make_record("bg", -1, 3, 1, {1.0, -2.0, 4.0})};
    cfg.seed = 17;
    return cfg;
}

}  // namespace

TEST(DeltaTest, LinearModelDeltaIsMinusWeightTimesBackground) {
    const Model m = linear3();
    const auto refs = testutil::random_records(4, 3, 1, 21);
    const auto delta = estimate_delta(m, refs, Tensor({3, 1}), 16, linear_ss(), 0);
    // IG at zero gives w_i x_i, shapley sampling gives w_i (x_i - t_i), so the
    // offset is -w_i t_i for every reference.
    const std::vector<double> expected = {-2.0 * 1.0, 1.0 * -2.0, -0.5 * 4.0};
    ASSERT_EQ(delta.per_feature.size(), 3u);
    ASSERT_EQ(delta.per_reference_deltas.size(), 4u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(delta.per_feature[i], expected[i], 1e-12);
        for (const auto& row : delta.per_reference_deltas) {
            EXPECT_NEAR(row[i], expected[i], 1e-12);
        }
        EXPECT_LE(delta.standard_error[i], 1e-15);
    }
    EXPECT_EQ(delta.k_references, 4);
    EXPECT_EQ(delta.reference_ids.size(), 4u);
}

TEST(DeltaTest, ReferenceCountDoesNotMatterOnLinearModels) {
    const Model m = linear3();
    const auto one = estimate_delta(m, testutil::random_records(1, 3, 1, 22), Tensor({3, 1}),
                                    16, linear_ss(), 0);
    const auto ten = estimate_delta(m, testutil::random_records(10, 3, 1, 23), Tensor({3, 1}),
                                    16, linear_ss(), 0);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(one.per_feature[i], ten.per_feature[i], 1e-12);
    }
}

TEST(DeltaTest, CompensatedIgEqualsShapleyOnLinearModels) {
    const Model m = linear3();
    const auto delta = estimate_delta(m, testutil::random_records(3, 3, 1, 24), Tensor({3, 1}),
                                      16, linear_ss(), 0);
    for (int i = 0; i < 5; ++i) {
        const Record r = testutil::random_record(3, 1, 30 + i);
        const auto cig = compensated_ig(m, r, delta, Tensor({3, 1}), 16, 0);
        const auto ss = shapley_sampling(m, r, linear_ss(), 0);
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(cig.per_feature[j], ss.per_feature[j], 1e-12);
        }
        EXPECT_EQ(cig.method, Method::cig);
        EXPECT_EQ(cig.baseline_descriptor, "zero+delta");
    }
}

TEST(DeltaTest, DeterministicAcrossThreadCounts) {
    const Model m = make_temporal_model(4, 16, 2, 40);
    const auto refs = testutil::random_records(6, 4, 16, 41);
    SSConfig cfg;
    cfg.samples_per_feature = 60;
    cfg.background = testutil::random_records(5, 4, 16, 42);
    cfg.seed = 43;
    cfg.threads = 1;
    const auto base = estimate_delta(m, refs, Tensor({4, 16}), 32, cfg, 1);
    for (int threads : {3, 7}) {
        SSConfig c = cfg;
        c.threads = threads;
        const auto again = estimate_delta(m, refs, Tensor({4, 16}), 32, c, 1);
        EXPECT_EQ(again.per_feature, base.per_feature) << threads << " threads";
        EXPECT_EQ(again.standard_error, base.standard_error) << threads << " threads";
    }
}

TEST(DeltaTest, StandardErrorAggregatesAcrossReferences) {
    const Model m = make_temporal_model(4, 16, 2, 44);
    const auto refs = testutil::random_records(3, 4, 16, 45);
    SSConfig cfg;
    cfg.samples_per_feature = 40;
    cfg.background = testutil::random_records(4, 4, 16, 46);
    cfg.seed = 47;
    const auto delta = estimate_delta(m, refs, Tensor({4, 16}), 32, cfg, 0);
    // Recompute the independent-sum error from the per-reference runs.
    for (int i = 0; i < 4; ++i) {
        double ssq = 0.0;
        for (std::size_t r = 0; r < refs.size(); ++r) {
            SSConfig local = cfg;
            local.seed = Rng::mix(cfg.seed, r);
            const auto ss = shapley_sampling(m, refs[r], local, 0);
            ssq += ss.standard_error[i] * ss.standard_error[i];
        }
        EXPECT_NEAR(delta.standard_error[i], std::sqrt(ssq) / refs.size(), 1e-15);
    }
}

TEST(DeltaIoTest, JsonRoundTripIsByteIdentical) {
    const Model m = make_temporal_model(4, 16, 2, 48);
    SSConfig cfg;
    cfg.samples_per_feature = 30;
    cfg.background = testutil::random_records(4, 4, 16, 49);
    cfg.seed = 50;
    const auto delta = estimate_delta(m, testutil::random_records(3, 4, 16, 51),
                                      Tensor({4, 16}), 32, cfg, 1);
    const std::string text = delta_to_json(delta);
    const CompensationDelta back = delta_from_json(text);
    EXPECT_EQ(delta_to_json(back), text);
    EXPECT_EQ(back.per_feature, delta.per_feature);
    EXPECT_EQ(back.standard_error, delta.standard_error);
    EXPECT_EQ(back.per_reference_deltas, delta.per_reference_deltas);
    EXPECT_EQ(back.reference_ids, delta.reference_ids);
    EXPECT_EQ(back.class_index, delta.class_index);
    EXPECT_EQ(back.ss_seed, delta.ss_seed);

    const std::string path = ::testing::TempDir() + "/delta_io_test.json";
    save_delta(delta, path);
    const CompensationDelta loaded = load_delta(path);
    EXPECT_EQ(delta_to_json(loaded), text);
    std::remove(path.c_str());
}

TEST(DeltaIoTest, RejectsInconsistentDocuments) {
    EXPECT_THROW(delta_from_json("nope"), std::invalid_argument);
    EXPECT_THROW(delta_from_json("{}"), std::invalid_argument);
    const Model m = linear3();
    const auto delta = estimate_delta(m, testutil::random_records(2, 3, 1, 52), Tensor({3, 1}),
                                      8, linear_ss(), 0);
    std::string text = delta_to_json(delta);
    const auto pos = text.find("\"k_references\": 2");
    ASSERT_NE(pos, std::string::npos);
    std::string bad = text;
    bad.replace(pos, 17, "\"k_references\": 5");
    EXPECT_THROW(delta_from_json(bad), std::invalid_argument);
}

TEST(CompensationErrorTest, RejectsMismatchedUses) {
    const Model m = linear3();
    EXPECT_THROW(estimate_delta(m, {}, Tensor({3, 1}), 8, linear_ss(), 0),
                 std::invalid_argument);
    SSConfig tp = linear_ss();
    tp.granularity = Granularity::timepoint;
    EXPECT_THROW(estimate_delta(m, testutil::random_records(2, 3, 1, 53), Tensor({3, 1}), 8,
                                tp, 0),
                 std::invalid_argument);

    const auto delta = estimate_delta(m, testutil::random_records(2, 3, 1, 54), Tensor({3, 1}),
                                      8, linear_ss(), 0);
    const Record r = testutil::random_record(3, 1, 55);
    EXPECT_THROW(compensated_ig(m, r, delta, Tensor({3, 1}), 8, 0, Granularity::timepoint),
                 std::invalid_argument);

    CompensationDelta wrong_class = delta;
    wrong_class.class_index = 7;
    EXPECT_THROW(compensated_ig(m, r, wrong_class, Tensor({3, 1}), 8, 0),
                 std::invalid_argument);

    CompensationDelta short_delta = delta;
    short_delta.per_feature.pop_back();
    EXPECT_THROW(compensated_ig(m, r, short_delta, Tensor({3, 1}), 8, 0),
                 std::invalid_argument);
}
